"""Double-resonance detection on frequency curves.

Given an orbit's frequency curve confined to the resonant zone whose
normalized direction drifts enough, locate a time t* and independent modes
k1, k2 with omega(t*) close to the codimension-2 resonance: pick a component
whose normalized range is long enough, take an irreducible rational p/q in
that range with denominator above the enumeration cutoff, locate the crossing
by bisection, and pair the crossing mode with the zone witness there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lattice import IntVector, ResonanceModule, primitive_part, saturate
from .resonance import (DEFAULT_K_CAP, ZoneParameters, classify, classify_many,
                        rational_in_interval)

BISECTION_ITERS = 120


class InsufficientDriftError(RuntimeError):
    """Normalized-direction drift below threshold: no crossing guaranteed."""


class NotInZoneError(RuntimeError):
    """A sample (or t*) classifies nonresonant: curve is not confined to N."""


@dataclass(frozen=True)
class FrequencyCurve:
    """Time-ordered samples of omega(I(t)); all sup-norms must be positive."""

    times: np.ndarray
    omegas: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        om = np.asarray(self.omegas, dtype=float)
        if t.ndim != 1 or om.ndim != 2 or om.shape[0] != t.shape[0] or t.shape[0] == 0:
            raise ValueError("malformed curve data")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(np.max(np.abs(om), axis=1) == 0.0):
            raise ValueError("zero frequency sample cannot be normalized")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "omegas", om)

    @classmethod
    def from_trajectory(cls, traj, model=None) -> "FrequencyCurve":
        mdl = model if model is not None else traj.system.model
        om = traj.actions @ mdl.quadratic.T + mdl.linear
        return cls(traj.times, om)

    @property
    def n(self) -> int:
        return self.omegas.shape[1]

    def normalized(self) -> np.ndarray:
        sup = np.max(np.abs(self.omegas), axis=1)
        return self.omegas / sup[:, None]

    def interpolate(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.omegas[:, i])
                         for i in range(self.n)])


def component_ranges(curve: FrequencyCurve) -> list[tuple[float, float]]:
    """Per-index (min, max) of omega_i(t)/|omega(t)| over the samples."""
    v = curve.normalized()
    return [(float(v[:, i].min()), float(v[:, i].max())) for i in range(curve.n)]


def project_to_double_resonance(omega, k1: IntVector, k2: IntVector):
    """Orthogonal projection of omega onto {x : k1.x = k2.x = 0} and distance."""
    om = np.asarray(omega, dtype=float)
    M = np.array([k1.entries, k2.entries], dtype=float)
    gram = M @ M.T
    if abs(np.linalg.det(gram)) < 1e-12:
        raise ValueError("modes are linearly dependent")
    omega_bar = om - M.T @ np.linalg.solve(gram, M @ om)
    return omega_bar, float(np.linalg.norm(om - omega_bar))


@dataclass(frozen=True)
class DoubleResonanceWitness:
    t_star: float
    k1: IntVector
    k2: IntVector
    module: ResonanceModule
    distance: float
    omega_star: np.ndarray
    # Audit fields of the construction.
    p: int
    q: int
    index_i: int
    index_j: int
    interval: tuple[float, float]
    K_used: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_star": self.t_star,
                "k1": list(self.k1.entries),
                "k2": list(self.k2.entries),
                "module_basis": [list(v.entries) for v in self.module.basis],
                "distance": self.distance,
                "omega_star": [float(x) for x in self.omega_star],
                "audit": {
                    "p": self.p,
                    "q": self.q,
                    "index_i": self.index_i,
                    "index_j": self.index_j,
                    "interval": list(self.interval),
                    "K_used": self.K_used,
                },
            },
            indent=2,
        )


def _normalized_component(curve: FrequencyCurve, t: float, i: int) -> float:
    om = curve.interpolate(t)
    return om[i] / np.max(np.abs(om))


def _locate_crossing(curve: FrequencyCurve, i: int, target: float) -> float:
    """First time where omega_i/|omega| crosses the target (bisection)."""
    v = curve.normalized()[:, i]
    t = curve.times
    for s in range(len(t) - 1):
        f0 = v[s] - target
        f1 = v[s + 1] - target
        if f0 == 0.0:
            return float(t[s])
        if f0 * f1 < 0.0:
            lo, hi = float(t[s]), float(t[s + 1])
            glo = f0
            for _ in range(BISECTION_ITERS):
                mid = 0.5 * (lo + hi)
                gm = _normalized_component(curve, mid, i) - target
                if gm == 0.0:
                    return mid
                if glo * gm < 0.0:
                    hi = mid
                else:
                    lo, glo = mid, gm
            return 0.5 * (lo + hi)
    if v[-1] == target:
        return float(t[-1])
    raise RuntimeError("no bracketing segment for the rational crossing")


def detect(curve: FrequencyCurve, params: ZoneParameters, delta: float,
           drift_threshold: float | None = None, K_cap: float | None = None,
           check_confinement: bool = True) -> DoubleResonanceWitness:
    """Locate a double-resonance witness on the curve.

    `drift_threshold` defaults to epsilon**delta; the curve must have some
    normalized component whose range is at least drift_threshold / n, else
    InsufficientDriftError ("no crossing guaranteed").
    """
    n = curve.n
    if n < 3:
        raise ValueError("double-resonance detection needs dimension >= 3")
    if drift_threshold is None:
        drift_threshold = params.epsilon ** delta
    K_used = min(params.K, K_cap if K_cap is not None else DEFAULT_K_CAP)

    if check_confinement:
        mask, _, _ = classify_many(curve.omegas, params, K_used)
        if not mask.all():
            raise NotInZoneError("not in N(eps): curve leaves the resonant zone")

    ranges = component_ranges(curve)
    index_i = None
    for i, (lo, hi) in enumerate(ranges):
        if hi - lo >= drift_threshold / n:
            index_i = i
            break
    if index_i is None:
        raise InsufficientDriftError("no crossing guaranteed")
    lo, hi = ranges[index_i]

    p, q = rational_in_interval(lo, hi, K_used)
    target = p / q
    t_star = _locate_crossing(curve, index_i, target)
    omega_star = curve.interpolate(t_star)

    index_j = int(np.argmax(np.abs(omega_star)))
    sign = 1 if omega_star[index_j] > 0 else -1
    entries = [0] * n
    entries[index_i] += q
    entries[index_j] -= sign * p
    k2 = IntVector(entries)
    k2 = primitive_part(k2)[0]  # already primitive since gcd(p, q) = 1

    label = classify(omega_star, params, K_used)
    if not label.resonant:
        raise NotInZoneError("not in N(eps)")
    k1 = label.witness

    module = saturate([k1, k2])
    _, distance = project_to_double_resonance(omega_star, k1, k2)
    return DoubleResonanceWitness(
        t_star=t_star, k1=k1, k2=k2, module=module, distance=distance,
        omega_star=omega_star, p=p, q=q, index_i=index_i, index_j=index_j,
        interval=(lo, hi), K_used=K_used,
    )
