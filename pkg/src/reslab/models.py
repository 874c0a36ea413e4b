"""Concrete Hamiltonians: quadratic integrable parts and trig-polynomial
perturbations, with a decidable quasi-convexity check and certified sup-norm
bounds on analyticity domains.

The integrable part is restricted to h(I) = I.A.I/2 + b.I so the Hessian is
constant and quasi-convexity reduces to a finite family of constrained
eigenproblems.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .lattice import IntVector
from .polynomials import ActionPolynomial

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class IntegrableModel:
    """h(I) = I.A.I/2 + b.I with symmetric A; the frequency map is A.I + b."""

    __slots__ = ("quadratic", "linear")

    def __init__(self, quadratic, linear):
        A = np.array(quadratic, dtype=float)
        b = np.array(linear, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("quadratic part must be a square matrix")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("quadratic part must be symmetric")
        if b.shape != (A.shape[0],):
            raise ValueError("linear part has wrong shape")
        A.setflags(write=False)
        b.setflags(write=False)
        self.quadratic = A
        self.linear = b

    @classmethod
    def isotropic(cls, n: int) -> "IntegrableModel":
        return cls(np.eye(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def frequency(self, action) -> np.ndarray:
        return self.quadratic @ np.asarray(action, dtype=float) + self.linear

    def h_value(self, action) -> float:
        I = np.asarray(action, dtype=float)
        return float(0.5 * I @ self.quadratic @ I + self.linear @ I)

    def h_polynomial(self) -> ActionPolynomial:
        n = self.n
        coeffs: dict[tuple, float] = {}
        for i in range(n):
            for j in range(i, n):
                c = self.quadratic[i, j] if i != j else 0.5 * self.quadratic[i, i]
                if c != 0.0:
                    e = [0] * n
                    e[i] += 1
                    e[j] += 1
                    coeffs[tuple(e)] = coeffs.get(tuple(e), 0.0) + float(c)
            if self.linear[i] != 0.0:
                e = [0] * n
                e[i] = 1
                coeffs[tuple(e)] = coeffs.get(tuple(e), 0.0) + float(self.linear[i])
        return ActionPolynomial(n, coeffs)

    def __repr__(self):
        return f"IntegrableModel(n={self.n})"


def frequency(model: IntegrableModel, action) -> np.ndarray:
    return model.frequency(action)


@dataclass(frozen=True)
class PerturbationTerm:
    """One harmonic c(I) * cos(k.theta + phase), c polynomial of degree <= 2."""

    mode: IntVector
    coeff: ActionPolynomial
    phase: float = 0.0

    def __post_init__(self):
        if self.coeff.degree > 2:
            raise ValueError("coefficient degree must be at most 2")
        if not self.coeff.is_real(tol=0.0):
            raise ValueError("coefficient must be real")


@dataclass(frozen=True)
class Perturbation:
    """Real trig polynomial f(theta, I) = sum c_k(I) cos(k.theta + phi_k)."""

    n: int
    terms: tuple[PerturbationTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for t in self.terms:
            if t.mode.n != self.n:
                raise ValueError("term dimension mismatch")
            key = min(t.mode.entries, (-t.mode).entries)
            if key in seen:
                raise ValueError(f"duplicate mode (up to sign): {t.mode.entries}")
            seen.add(key)

    @classmethod
    def zero(cls, n: int) -> "Perturbation":
        return cls(n, ())

    @classmethod
    def from_cosines(cls, n: int, harmonics) -> "Perturbation":
        """harmonics: iterable of (mode, amplitude) or (mode, amplitude, phase)."""
        terms = []
        for h in harmonics:
            mode, amp = h[0], h[1]
            phase = h[2] if len(h) > 2 else 0.0
            if not isinstance(mode, IntVector):
                mode = IntVector(mode)
            terms.append(PerturbationTerm(mode, ActionPolynomial.constant(n, float(amp)), float(phase)))
        return cls(n, tuple(terms))

    @property
    def theta_only(self) -> bool:
        return all(t.coeff.is_constant for t in self.terms)

    def scaled(self, factor: float) -> "Perturbation":
        return Perturbation(
            self.n,
            tuple(PerturbationTerm(t.mode, t.coeff.scale(factor), t.phase) for t in self.terms),
        )


def eval_perturbation(f: Perturbation, theta, action) -> float:
    th = np.asarray(theta, dtype=float)
    total = 0.0
    for t in f.terms:
        arg = float(np.dot(th, t.mode.entries)) + t.phase
        total += complex(t.coeff.evaluate(action)).real * math.cos(arg)
    return total


def grad_perturbation(f: Perturbation, theta, action):
    """Returns (df/dtheta, df/dI) as float arrays."""
    th = np.asarray(theta, dtype=float)
    I = np.asarray(action, dtype=float)
    dtheta = np.zeros(f.n)
    dI = np.zeros(f.n)
    for t in f.terms:
        arg = float(np.dot(th, t.mode.entries)) + t.phase
        c = t.coeff.evaluate(I).real
        dtheta -= c * math.sin(arg) * np.array(t.mode.entries, dtype=float)
        gc = np.array([g.evaluate(I).real for g in t.coeff.grad()])
        dI += gc * math.cos(arg)
    return dtheta, dI


def sup_norm_bound(f: Perturbation, r: float, s: float, domain_radius: float) -> float:
    """Certified upper bound for the analytic sup-norm on V_{r,s} of the domain.

    Each term is bounded coefficient-wise over the complex r-neighborhood of
    the sup-norm ball of the given radius, times e^{|k|_1 s} for the angles.
    """
    if r <= 0 or s <= 0:
        raise ValueError("r and s must be positive")
    total = 0.0
    for t in f.terms:
        total += t.coeff.abs_bound(domain_radius + r) * math.exp(t.mode.norm_l1 * s)
    return total


@dataclass(frozen=True)
class ConvexityParams:
    """The ensemble (l, m, M, R, r0, s0) of domain and convexity constants."""

    l: float
    m: float
    M: float
    R: float
    r0: float
    s0: float

    def __post_init__(self):
        vals = (self.l, self.m, self.M, self.R, self.r0, self.s0)
        if any(v <= 0 for v in vals):
            raise ValueError("all parameters must be positive")
        if self.m > self.M:
            raise ValueError("m must not exceed M")


@dataclass(frozen=True)
class QuasiConvexReport:
    holds: bool
    worst_margin: float
    witness: np.ndarray | None
    worst_action: np.ndarray | None


def _sphere_quadratic_min(M: np.ndarray, g: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize w.M.w + 2 g.w over the unit sphere (secular equation)."""
    d, W = np.linalg.eigh(M)
    gt = W.T @ g
    scale = max(1.0, float(np.abs(gt).max()), float(np.abs(d).max()))
    tol = 1e-13 * scale
    active = np.abs(gt) > tol
    if not active.any():
        w = W[:, 0]
        return float(d[0]), w

    da = d[active]
    ga = gt[active]

    def wnorm_sq(lam):
        return float(np.sum((ga / (da - lam)) ** 2))

    lam_top = float(d[0])
    if not active[0] or d[0] < da.min() - tol:
        # Smallest eigendirection carries no linear term: possible hard case.
        s = wnorm_sq(lam_top) if da.min() > lam_top else np.inf
        if s <= 1.0:
            wa = -(ga / (da - lam_top))
            w = W[:, active] @ wa
            tau = math.sqrt(max(0.0, 1.0 - s))
            w = w + tau * W[:, 0]
            val = float(w @ M @ w + 2.0 * g @ w)
            return val, w
    # Secular root lam* < lam_top with ||w(lam*)|| = 1.
    hi = lam_top - 1e-14 * scale
    span = math.sqrt(float(np.sum(ga * ga))) + scale
    lo = lam_top - span - 1.0
    while wnorm_sq(lo) >= 1.0:
        lo = lam_top - 2.0 * (lam_top - lo)
    while wnorm_sq(hi) <= 1.0:
        hi = lam_top - 0.5 * (lam_top - hi)
    lam = brentq(lambda x: wnorm_sq(x) - 1.0, lo, hi, xtol=1e-15, rtol=1e-15)
    wa = -(ga / (da - lam))
    w = W[:, active] @ wa
    nw = float(np.linalg.norm(w))
    if nw > 0:
        w = w / nw
    val = float(w @ M @ w + 2.0 * g @ w)
    return val, w


def _min_quadratic_on_slab(A: np.ndarray, u: np.ndarray, c: float) -> tuple[float, np.ndarray]:
    """Minimize v.A.v over unit v subject to |v.u| <= c (u a unit vector)."""
    n = A.shape[0]
    d, V = np.linalg.eigh(A)
    best_val = math.inf
    best_v = None
    if c >= 1.0:
        return float(d[0]), V[:, 0]
    # Interior critical points: eigenvectors inside the slab.  Group nearly
    # degenerate eigenvalues; inside a group of dimension >= 2 one can rotate
    # the eigenvector to be orthogonal to u.
    i = 0
    while i < n:
        j = i
        while j + 1 < n and d[j + 1] - d[i] < 1e-12 * max(1.0, abs(d[i])):
            j += 1
        block = V[:, i:j + 1]
        if block.shape[1] == 1:
            v = block[:, 0]
        else:
            # Inside a degenerate eigenspace pick the direction minimizing
            # |v.u|: zero whenever the block dimension exceeds one.
            proj = block.T @ u
            pn = float(np.linalg.norm(proj))
            if pn < 1e-14:
                v = block[:, 0]
            else:
                basis, _ = np.linalg.qr(
                    np.column_stack([proj / pn, np.eye(block.shape[1])]))
                v = block @ basis[:, 1]
        if abs(float(v @ u)) <= c + 1e-12 and d[i] < best_val:
            best_val, best_v = float(d[i]), v
        i = j + 1
    # Boundary |v.u| = c: v = sigma*c*u + sqrt(1-c^2)*Q w with w on the unit
    # sphere of the complement of u.
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    Qp = Q[:, 1:n]
    root = math.sqrt(max(0.0, 1.0 - c * c))
    Mb = (1.0 - c * c) * (Qp.T @ A @ Qp)
    base = c * c * float(u @ A @ u)
    for sigma in (1.0, -1.0):
        gb = sigma * c * root * (Qp.T @ A @ u)
        val, w = _sphere_quadratic_min(Mb, gb)
        val += base
        if val < best_val:
            v = sigma * c * u + root * (Qp @ w)
            best_val, best_v = val, v / float(np.linalg.norm(v))
    return best_val, best_v


def check_quasi_convex(model: IntegrableModel, params: ConvexityParams,
                       sample_region, tol: float = 1e-10) -> QuasiConvexReport:
    """Check the slab condition v.A.v >= m on |v.grad h| <= l at each sample.

    For the quadratic model the per-sample problem is a constrained
    eigenproblem, solved exactly on the interior and by a secular equation on
    the active boundary.  `tol` absorbs solver round-off at the m-boundary.
    """
    samples = [np.asarray(s, dtype=float) for s in sample_region]
    if not samples:
        raise ValueError("empty sample region")
    A = model.quadratic
    slack = tol * max(1.0, params.m, float(np.abs(A).max()))
    holds = True
    worst_margin = math.inf
    witness = None
    worst_action = None
    for I in samples:
        om = model.frequency(I)
        nom = float(np.linalg.norm(om))
        if nom == 0.0:
            return QuasiConvexReport(False, -math.inf, None, I)
        c = params.l / nom
        val, v = _min_quadratic_on_slab(A, om / nom, c)
        margin = val - params.m
        if margin < worst_margin:
            worst_margin = margin
            witness = v
            worst_action = I
        if val < params.m - slack:
            holds = False
    return QuasiConvexReport(holds, worst_margin, witness, worst_action)


@dataclass(frozen=True)
class HamiltonianSystem:
    """H = h + f: quadratic integrable part plus trig-polynomial perturbation."""

    model: IntegrableModel
    perturbation: Perturbation
    convexity: ConvexityParams | None = None

    def __post_init__(self):
        if self.perturbation.n != self.model.n:
            raise ValueError("dimension mismatch between h and f")

    @property
    def n(self) -> int:
        return self.model.n

    def energy(self, theta, action) -> float:
        return self.model.h_value(action) + eval_perturbation(self.perturbation, theta, action)

    def scaled(self, factor: float) -> "HamiltonianSystem":
        return HamiltonianSystem(self.model, self.perturbation.scaled(factor), self.convexity)


# -- model files ----------------------------------------------------------------


def _poly_from_spec(n: int, spec) -> ActionPolynomial:
    if isinstance(spec, (int, float)):
        return ActionPolynomial.constant(n, float(spec))
    poly = ActionPolynomial.constant(n, float(spec.get("const", 0.0)))
    if "linear" in spec:
        poly = poly + ActionPolynomial.linear([float(x) for x in spec["linear"]])
    if "quad" in spec:
        q = np.array(spec["quad"], dtype=float)
        coeffs: dict[tuple, float] = {}
        for i in range(n):
            for j in range(n):
                if q[i, j] != 0.0:
                    e = [0] * n
                    e[i] += 1
                    e[j] += 1
                    coeffs[tuple(e)] = coeffs.get(tuple(e), 0.0) + q[i, j]
        poly = poly + ActionPolynomial(n, coeffs)
    return poly


def system_from_dict(data: dict) -> tuple[HamiltonianSystem, ConvexityParams | None]:
    """Build a HamiltonianSystem from a parsed model document."""
    mdl = data["model"]
    model = IntegrableModel(mdl["A"], mdl["b"])
    n = model.n
    terms = []
    for t in data.get("perturbation", {}).get("terms", []):
        mode = IntVector(t["k"])
        coeff = _poly_from_spec(n, t.get("coeff", t.get("amplitude", 0.0)))
        terms.append(PerturbationTerm(mode, coeff, float(t.get("phase", 0.0))))
    pert = Perturbation(n, tuple(terms))
    conv = None
    if "convexity" in data:
        c = data["convexity"]
        conv = ConvexityParams(l=c["l"], m=c["m"], M=c["M"], R=c["R"],
                               r0=c["r0"], s0=c["s0"])
    return HamiltonianSystem(model, pert, conv), conv


def load_system(path) -> tuple[HamiltonianSystem, str]:
    """Load a model file (TOML); returns the system and the file's sha256."""
    with open(path, "rb") as fh:
        raw = fh.read()
    data = tomllib.loads(raw.decode("utf-8"))
    system, _ = system_from_dict(data)
    return system, hashlib.sha256(raw).hexdigest()
