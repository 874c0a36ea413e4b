"""One explicit averaging step: truncation, resonant projection, homological
equation, Lie transform, and remainder measurement.

Fourier coefficients are action polynomials divided by products of the affine
small divisors k.omega(I).  Divisors are kept symbolic and evaluated lazily
(no polynomial division), so a coefficient is a sum of (numerator, divisor
powers) pairs.  Only first and second order Lie steps are provided; the decay
of the remainder is measured on grids rather than certified.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .lattice import IntVector, ResonanceModule
from .models import HamiltonianSystem, IntegrableModel, Perturbation
from .polynomials import ActionPolynomial, DegreeCapError

DEFAULT_DEGREE_CAP = 6


class SmallDivisorError(RuntimeError):
    """A required divisor |k.omega(I)| fell at or below alpha at a sample."""

    def __init__(self, mode, action, value, alpha):
        self.mode = tuple(mode)
        self.action = np.asarray(action, dtype=float)
        self.value = float(value)
        self.alpha = float(alpha)
        super().__init__(
            f"small divisor |k.omega| = {value:.3e} <= alpha = {alpha:.3e} "
            f"at k = {self.mode}, I = {self.action.tolist()}"
        )


def _divisor_value(mode, model: IntegrableModel, action) -> float:
    om = model.frequency(action)
    return float(np.dot(om, mode))


@dataclass(frozen=True)
class RationalCoeff:
    """numerator(I) / prod_k (k.omega(I))^p_k, divisors keyed by mode."""

    num: ActionPolynomial
    den: tuple = ()  # ((mode tuple, power), ...), canonically sorted

    @staticmethod
    def of(num: ActionPolynomial, den=()) -> "RationalCoeff":
        merged: dict[tuple, int] = {}
        for mode, power in den:
            mode = tuple(int(e) for e in mode)
            merged[mode] = merged.get(mode, 0) + int(power)
        canon = tuple(sorted((m, p) for m, p in merged.items() if p > 0))
        return RationalCoeff(num, canon)

    def evaluate(self, action, model: IntegrableModel | None) -> complex:
        val = self.num.evaluate(action)
        if self.den:
            if model is None:
                raise ValueError("divisor evaluation requires the model")
            for mode, power in self.den:
                val = val / _divisor_value(mode, model, action) ** power
        return val

    def scale(self, s) -> "RationalCoeff":
        return RationalCoeff(self.num.scale(s), self.den)

    def mul(self, other: "RationalCoeff", cap: int) -> "RationalCoeff":
        num = (self.num * other.num).check_degree(cap)
        return RationalCoeff.of(num, self.den + other.den)

    def directional_grad(self, weights, model: IntegrableModel,
                         cap: int) -> list["RationalCoeff"]:
        """d/dI along integer weights w: sum_j w_j d/dI_j of num / divisors."""
        out = [RationalCoeff(self.num.directional_derivative(weights), self.den)]
        A = model.quadratic
        for i, (mode, power) in enumerate(self.den):
            # d(k.omega)/dI_j = (A k)_j, constant.
            w = float(np.dot(np.asarray(weights, dtype=float), A @ np.array(mode, dtype=float)))
            if w == 0.0:
                continue
            num = self.num.scale(-power * w).check_degree(cap)
            den = list(self.den)
            den[i] = (mode, power + 1)
            out.append(RationalCoeff.of(num, den))
        return [rc for rc in out if not rc.num.is_zero]


def _merge_terms(terms) -> tuple[RationalCoeff, ...]:
    by_den: dict[tuple, ActionPolynomial] = {}
    for rc in terms:
        if rc.num.is_zero:
            continue
        if rc.den in by_den:
            by_den[rc.den] = by_den[rc.den] + rc.num
        else:
            by_den[rc.den] = rc.num
    return tuple(
        RationalCoeff(num, den) for den, num in sorted(by_den.items())
        if not num.is_zero
    )


class FourierPolynomial:
    """Trig polynomial sum_k c_k(I) e^{i k.theta} with rational coefficients.

    Reality holds when the coefficient of -k is the conjugate of that of k;
    constructors from real data preserve it.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms=None):
        self.n = int(n)
        clean: dict[tuple, tuple[RationalCoeff, ...]] = {}
        if terms:
            for mode, tlist in terms.items():
                mode = tuple(int(e) for e in mode)
                merged = _merge_terms(tlist)
                if merged:
                    clean[mode] = merged
        self.terms = clean

    @classmethod
    def zero(cls, n: int) -> "FourierPolynomial":
        return cls(n, {})

    @classmethod
    def from_perturbation(cls, f: Perturbation) -> "FourierPolynomial":
        terms: dict[tuple, list[RationalCoeff]] = defaultdict(list)
        for t in f.terms:
            half = t.coeff.scale(0.5)
            ph = complex(math.cos(t.phase), math.sin(t.phase))
            if t.mode.is_zero:
                terms[t.mode.entries].append(RationalCoeff(t.coeff.scale(ph.real)))
                continue
            terms[t.mode.entries].append(RationalCoeff(half.scale(ph)))
            terms[(-t.mode).entries].append(RationalCoeff(half.scale(ph.conjugate())))
        return cls(f.n, terms)

    @classmethod
    def from_model(cls, model: IntegrableModel) -> "FourierPolynomial":
        return cls(model.n, {(0,) * model.n: [RationalCoeff(model.h_polynomial())]})

    @property
    def modes(self):
        return sorted(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "FourierPolynomial") -> "FourierPolynomial":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        out: dict[tuple, list[RationalCoeff]] = defaultdict(list)
        for mode, ts in self.terms.items():
            out[mode].extend(ts)
        for mode, ts in other.terms.items():
            out[mode].extend(ts)
        return FourierPolynomial(self.n, out)

    def __sub__(self, other: "FourierPolynomial") -> "FourierPolynomial":
        return self + other.scale(-1.0)

    def scale(self, s) -> "FourierPolynomial":
        return FourierPolynomial(
            self.n,
            {m: [rc.scale(s) for rc in ts] for m, ts in self.terms.items()},
        )

    def filter_modes(self, keep) -> "FourierPolynomial":
        return FourierPolynomial(
            self.n, {m: list(ts) for m, ts in self.terms.items() if keep(m)}
        )

    # -- evaluation ------------------------------------------------------------
    def evaluate(self, theta, action, model: IntegrableModel | None = None) -> complex:
        th = np.asarray(theta, dtype=float)
        total = 0j
        for mode, ts in self.terms.items():
            cval = sum(rc.evaluate(action, model) for rc in ts)
            arg = float(np.dot(th, mode))
            total += cval * complex(math.cos(arg), math.sin(arg))
        return total

    def evaluate_real(self, theta, action, model: IntegrableModel | None = None,
                      imag_tol: float = 1e-9) -> float:
        val = self.evaluate(theta, action, model)
        scale = max(1.0, abs(val))
        if abs(val.imag) > imag_tol * scale:
            raise ValueError(f"evaluation is not real: {val!r}")
        return val.real

    def gradients(self, theta, action, model: IntegrableModel | None = None,
                  cap: int = DEFAULT_DEGREE_CAP):
        """(d/dtheta, d/dI) at a point, both real arrays."""
        th = np.asarray(theta, dtype=float)
        I = np.asarray(action, dtype=float)
        dtheta = np.zeros(self.n)
        dI = np.zeros(self.n)
        unit = np.eye(self.n, dtype=int)
        for mode, ts in self.terms.items():
            arg = float(np.dot(th, mode))
            e = complex(math.cos(arg), math.sin(arg))
            cval = sum(rc.evaluate(I, model) for rc in ts)
            kvec = np.array(mode, dtype=float)
            dtheta += (1j * cval * e).real * kvec
            for j in range(self.n):
                gj = 0j
                for rc in ts:
                    for g in rc.directional_grad(unit[j], model, cap):
                        gj += g.evaluate(I, model)
                dI[j] += (gj * e).real
        return dtheta, dI

    def __eq__(self, other):
        return (isinstance(other, FourierPolynomial)
                and self.n == other.n and self.terms == other.terms)

    def __repr__(self):
        return f"FourierPolynomial(n={self.n}, modes={len(self.terms)})"


# -- projections -------------------------------------------------------------------


def truncate(phi: FourierPolynomial, K: float) -> FourierPolynomial:
    """Keep exactly the modes with |k|_1 <= K (idempotent)."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    return phi.filter_modes(lambda m: sum(abs(e) for e in m) <= K)


def _module_keeps(module: ResonanceModule | None):
    if module is None or module.rank == 0:
        return lambda m: all(e == 0 for e in m)
    return lambda m: module.contains(IntVector(m)) if any(m) else True


def project(phi: FourierPolynomial, module: ResonanceModule | None) -> FourierPolynomial:
    """Keep the modes lying in the module; {0} keeps only the theta-average."""
    return phi.filter_modes(_module_keeps(module))


# -- Poisson bracket ----------------------------------------------------------------


def poisson_bracket(F: FourierPolynomial, G: FourierPolynomial,
                    model: IntegrableModel,
                    degree_cap: int = DEFAULT_DEGREE_CAP) -> FourierPolynomial:
    """{F, G} = sum_j dF/dtheta_j dG/dI_j - dF/dI_j dG/dtheta_j."""
    if F.n != G.n:
        raise ValueError("dimension mismatch")
    out: dict[tuple, list[RationalCoeff]] = defaultdict(list)
    for k, fts in F.terms.items():
        for l, gts in G.terms.items():
            mode = tuple(a + b for a, b in zip(k, l))
            acc = out[mode]
            # i * f_k * (k . grad g_l)
            if any(k):
                for gt in gts:
                    for part in gt.directional_grad(k, model, degree_cap):
                        for ft in fts:
                            acc.append(ft.mul(part, degree_cap).scale(1j))
            # -i * g_l * (l . grad f_k)
            if any(l):
                for ft in fts:
                    for part in ft.directional_grad(l, model, degree_cap):
                        for gt in gts:
                            acc.append(gt.mul(part, degree_cap).scale(-1j))
    return FourierPolynomial(F.n, out)


# -- homological equation --------------------------------------------------------------


@dataclass(frozen=True)
class GeneratingFunction:
    """First-order generator chi with the (K, alpha, module) used to build it."""

    poly: FourierPolynomial
    K: float
    alpha: float
    module: ResonanceModule | None

    @property
    def n(self) -> int:
        return self.poly.n


def solve_homological(f, model: IntegrableModel, module: ResonanceModule | None,
                      K: float, alpha: float, domain_samples) -> GeneratingFunction:
    """chi with chi_k = f_k / (i k.omega(I)) over the non-resonant truncated modes.

    Every retained mode must satisfy |k.omega(I)| > alpha at every sample;
    violations raise SmallDivisorError with the offending (k, I).
    """
    phi = f if isinstance(f, FourierPolynomial) else FourierPolynomial.from_perturbation(f)
    keeps = _module_keeps(module)
    samples = [np.asarray(s, dtype=float) for s in domain_samples]
    if not samples:
        raise ValueError("domain_samples must be nonempty")
    terms: dict[tuple, list[RationalCoeff]] = {}
    for mode, ts in truncate(phi, K).terms.items():
        if keeps(mode):
            continue
        for I in samples:
            d = _divisor_value(mode, model, I)
            if abs(d) <= alpha:
                raise SmallDivisorError(mode, I, abs(d), alpha)
        # 1/(i d) = -i/d
        terms[mode] = [
            RationalCoeff.of(rc.num.scale(-1j), rc.den + ((mode, 1),)) for rc in ts
        ]
    return GeneratingFunction(FourierPolynomial(phi.n, terms), K, alpha, module)


# -- Lie transform ----------------------------------------------------------------------


@dataclass(frozen=True)
class NormalFormStep:
    """Split H o Phi ~ h + g + remainder with P_Lambda g = g."""

    system: HamiltonianSystem
    chi: GeneratingFunction
    order: int
    transformed: FourierPolynomial
    resonant: FourierPolynomial
    remainder: FourierPolynomial

    @property
    def normal_part(self) -> FourierPolynomial:
        """g: the resonant part beyond the unperturbed h."""
        return self.resonant - FourierPolynomial.from_model(self.system.model)


def lie_transform(system: HamiltonianSystem, chi: GeneratingFunction,
                  order: int = 1,
                  degree_cap: int = DEFAULT_DEGREE_CAP) -> NormalFormStep:
    """Lie series H + {H, chi} + (1/2){{H, chi}, chi} + ... up to the order.

    Degree-cap overflow raises DegreeCapError (no silent truncation).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    model = system.model
    H = FourierPolynomial.from_model(model) + FourierPolynomial.from_perturbation(
        system.perturbation)
    total = H
    term = H
    for j in range(1, order + 1):
        term = poisson_bracket(term, chi.poly, model, degree_cap).scale(1.0 / j)
        total = total + term
    resonant = project(total, chi.module)
    remainder = total - resonant
    return NormalFormStep(system, chi, order, total, resonant, remainder)


# -- measurement --------------------------------------------------------------------------


def chi_flow_map(chi: GeneratingFunction, model: IntegrableModel, theta, action,
                 rtol: float = 1e-11, atol: float = 1e-13):
    """Time-1 Hamiltonian flow of chi from (theta, I); high-accuracy test oracle."""
    n = chi.n

    def rhs(_t, y):
        th, I = y[:n], y[n:]
        dth, dI = chi.poly.gradients(th, I, model)
        return np.concatenate([dI, -dth])

    y0 = np.concatenate([np.asarray(theta, float), np.asarray(action, float)])
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:  # pragma: no cover
        raise RuntimeError(f"chi flow integration failed: {sol.message}")
    yf = sol.y[:, -1]
    return yf[:n], yf[n:]


@dataclass(frozen=True)
class RemainderReport:
    nonresonant_sup: float
    coordinate_shift_sup: float


def measure_remainder(step: NormalFormStep, grid, flow_grid=None,
                      module: ResonanceModule | None = None,
                      K: float | None = None) -> RemainderReport:
    """Sup of the non-normal-form part over the grid, and sup |Pi_I Phi - I|.

    `grid` is an iterable of (theta, I) pairs.  The coordinate shift is
    measured through the chi flow on `flow_grid` (defaults to `grid`).
    If `module`/`K` are given the remainder is re-split against them.
    """
    model = step.system.model
    rem = step.remainder
    if module is not None:
        full = truncate(step.transformed, K) if K is not None else step.transformed
        rem = full - project(full, module)
    sup = 0.0
    for theta, action in grid:
        val = abs(rem.evaluate(theta, action, model))
        if val > sup:
            sup = val
    shift = 0.0
    for theta, action in (flow_grid if flow_grid is not None else grid):
        _, If = chi_flow_map(step.chi, model, theta, action)
        dev = float(np.max(np.abs(If - np.asarray(action, float))))
        if dev > shift:
            shift = dev
    return RemainderReport(nonresonant_sup=sup, coordinate_shift_sup=shift)


__all__ = [
    "DEFAULT_DEGREE_CAP", "SmallDivisorError", "DegreeCapError", "RationalCoeff",
    "FourierPolynomial", "truncate", "project", "poisson_bracket",
    "GeneratingFunction", "solve_homological", "NormalFormStep", "lie_transform",
    "chi_flow_map", "RemainderReport", "measure_remainder",
]
