"""Polynomials in the action variables, used as Fourier-mode coefficients.

Coefficients may be real or complex.  The representation is a sparse map
from exponent multi-indices to scalars, which keeps products and gradients
exact apart from float rounding.
"""

from __future__ import annotations

from typing import Iterable, Mapping

_DROP_TOL = 0.0  # exact zero only; never silently drop small coefficients


class DegreeCapError(RuntimeError):
    """Raised when an operation would exceed the configured degree cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"coefficient degree cap exceeded: operation requires degree "
            f"{required}, cap is {cap}"
        )


class ActionPolynomial:
    """Sparse polynomial c(I) over n action variables."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Mapping[tuple, complex] | None = None):
        self.n = int(n)
        clean = {}
        if coeffs:
            for expo, c in coeffs.items():
                expo = tuple(int(e) for e in expo)
                if len(expo) != self.n or any(e < 0 for e in expo):
                    raise ValueError(f"bad exponent {expo} for n={self.n}")
                if c != 0:
                    clean[expo] = clean.get(expo, 0) + c
        self.coeffs = {e: c for e, c in clean.items() if c != 0}

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "ActionPolynomial":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, value) -> "ActionPolynomial":
        return cls(n, {(0,) * n: value})

    @classmethod
    def linear(cls, vec: Iterable) -> "ActionPolynomial":
        vec = list(vec)
        n = len(vec)
        coeffs = {}
        for j, v in enumerate(vec):
            e = [0] * n
            e[j] = 1
            coeffs[tuple(e)] = v
        return cls(n, coeffs)

    @classmethod
    def monomial(cls, n: int, expo: tuple, value=1.0) -> "ActionPolynomial":
        return cls(n, {tuple(expo): value})

    # -- basic queries -----------------------------------------------------
    @property
    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(sum(e) for e in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.coeffs)

    def constant_value(self):
        return self.coeffs.get((0,) * self.n, 0)

    def is_real(self, tol: float = 0.0) -> bool:
        return all(abs(complex(c).imag) <= tol for c in self.coeffs.values())

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other: "ActionPolynomial") -> "ActionPolynomial":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return ActionPolynomial(self.n, out)

    def __sub__(self, other: "ActionPolynomial") -> "ActionPolynomial":
        return self + (-other)

    def __neg__(self) -> "ActionPolynomial":
        return ActionPolynomial(self.n, {e: -c for e, c in self.coeffs.items()})

    def scale(self, s) -> "ActionPolynomial":
        return ActionPolynomial(self.n, {e: s * c for e, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, ActionPolynomial):
            return self.scale(other)
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out: dict[tuple, complex] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return ActionPolynomial(self.n, out)

    __rmul__ = __mul__

    def conjugate(self) -> "ActionPolynomial":
        return ActionPolynomial(
            self.n, {e: complex(c).conjugate() for e, c in self.coeffs.items()}
        )

    # -- calculus ------------------------------------------------------------
    def grad(self) -> list["ActionPolynomial"]:
        """Partial derivatives with respect to each action variable."""
        parts = []
        for j in range(self.n):
            out = {}
            for e, c in self.coeffs.items():
                if e[j] == 0:
                    continue
                ee = list(e)
                ee[j] -= 1
                out[tuple(ee)] = out.get(tuple(ee), 0) + e[j] * c
            parts.append(ActionPolynomial(self.n, out))
        return parts

    def directional_derivative(self, weights) -> "ActionPolynomial":
        """Sum_j w_j dP/dI_j without building each partial separately."""
        out: dict[tuple, complex] = {}
        for e, c in self.coeffs.items():
            for j, w in enumerate(weights):
                if w == 0 or e[j] == 0:
                    continue
                ee = list(e)
                ee[j] -= 1
                key = tuple(ee)
                out[key] = out.get(key, 0) + w * e[j] * c
        return ActionPolynomial(self.n, out)

    # -- evaluation ------------------------------------------------------------
    def evaluate(self, action) -> complex:
        total = 0
        for e, c in self.coeffs.items():
            term = c
            for j, p in enumerate(e):
                if p:
                    term = term * action[j] ** p
            total += term
        return total

    def abs_bound(self, radius: float) -> float:
        """Coefficient-wise bound for |c(I)| over the sup-norm ball of the radius."""
        return sum(abs(c) * radius ** sum(e) for e, c in self.coeffs.items())

    # -- misc -------------------------------------------------------------------
    def check_degree(self, cap: int) -> "ActionPolynomial":
        d = self.degree
        if d > cap:
            raise DegreeCapError(required=d, cap=cap)
        return self

    def __eq__(self, other):
        return (
            isinstance(other, ActionPolynomial)
            and self.n == other.n
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        if not self.coeffs:
            return "ActionPolynomial(0)"
        bits = []
        for e, c in sorted(self.coeffs.items()):
            mono = "*".join(f"I{j}^{p}" for j, p in enumerate(e) if p) or "1"
            bits.append(f"{c!r}*{mono}")
        return "ActionPolynomial(" + " + ".join(bits) + ")"


def poly_close(a: ActionPolynomial, b: ActionPolynomial, tol: float = 1e-12) -> bool:
    keys = set(a.coeffs) | set(b.coeffs)
    return all(abs(a.coeffs.get(k, 0) - b.coeffs.get(k, 0)) <= tol for k in keys)
