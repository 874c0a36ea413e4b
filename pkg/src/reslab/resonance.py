"""Frequency-space geometry: zone decomposition and rational approximation.

Frequencies are plain float arrays; `sup_norm` gives the |omega| = max_j
|omega_j| convention used by the detector.  Distances to single resonances
use the Euclidean point-to-hyperplane formula |k.omega| / ||k||_2 (this is
equivalent to the sup metric up to a sqrt(n) factor, absorbed into the
constants everywhere the two are compared).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import IntVector, ResonanceModule

RESONANT = "resonant"
NONRESONANT = "nonresonant"

#: Default enumeration cap; realistic K(eps) makes the K^n mode count
#: infeasible, so zone maps record the truncation they used.
DEFAULT_K_CAP = 20.0


@dataclass(frozen=True)
class ZoneParameters:
    """The parameter ensemble (eps, beta, s0, L, K, r, alpha).

    L = 12*s0, K = -L*ln(eps), r = sqrt(eps)/beta, alpha = r*K/beta.
    """

    epsilon: float
    beta: float
    s0: float
    L: float
    K: float
    r: float
    alpha: float


def make_zone_parameters(epsilon: float, beta: float, s0: float) -> ZoneParameters:
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if s0 <= 0.0:
        raise ValueError("s0 must be positive")
    L = 12.0 * s0
    K = -L * math.log(epsilon)
    if K < 1.0:
        raise ValueError("degenerate parameters: K < 1")
    r = epsilon ** 0.5 / beta
    alpha = r * K / beta
    return ZoneParameters(epsilon=epsilon, beta=beta, s0=s0, L=L, K=K, r=r, alpha=alpha)


def sup_norm(omega) -> float:
    return float(np.max(np.abs(np.asarray(omega, dtype=float))))


@dataclass(frozen=True)
class ZoneLabel:
    """Classification of a frequency: resonant (with witness mode) or not.

    `distance` is the smallest hyperplane distance among the enumerated modes,
    reported for both labels.
    """

    kind: str
    witness: IntVector | None
    distance: float

    @property
    def resonant(self) -> bool:
        return self.kind == RESONANT


def dist_to_resonance(omega, k: IntVector) -> float:
    """Euclidean distance from omega to the hyperplane {k . x = 0}."""
    if not isinstance(k, IntVector):
        k = IntVector(k)
    if k.is_zero:
        raise ValueError("zero mode")
    om = np.asarray(omega, dtype=float)
    return abs(float(np.dot(om, k.entries))) / k.norm_l2


def _signed_compositions(n: int, total: int):
    """All integer vectors of exact l1 norm `total`, first nonzero positive."""
    out = []

    def rec(prefix, remaining, slots, leading_zero):
        if slots == 0:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        if slots == 1:
            vals = [remaining] if leading_zero else (
                [remaining, -remaining] if remaining else [0]
            )
            for v in vals:
                rec(prefix + [v], 0, 0, leading_zero and v == 0)
            return
        for mag in range(remaining + 1):
            if mag == 0:
                rec(prefix + [0], remaining, slots - 1, leading_zero)
            elif leading_zero:
                rec(prefix + [mag], remaining - mag, slots - 1, False)
            else:
                rec(prefix + [mag], remaining - mag, slots - 1, False)
                rec(prefix + [-mag], remaining - mag, slots - 1, False)

    rec([], total, n, True)
    return out


def enumerate_modes(n: int, K: float):
    """One representative of each pair {k, -k} with 0 < |k|_1 <= K.

    Yields in (l1 norm, lexicographic) order; the count is (N(n, K) - 1) / 2
    with N the number of integer points in the l1 ball.  Beware: the count
    grows like K^n.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    for w in range(1, math.floor(K) + 1):
        for entries in sorted(_signed_compositions(n, w)):
            yield IntVector(entries)


@lru_cache(maxsize=32)
def _mode_table(n: int, K_int: int):
    modes = list(enumerate_modes(n, K_int))
    mat = np.array([m.entries for m in modes], dtype=float)
    inv_l2 = 1.0 / np.sqrt(np.sum(mat * mat, axis=1))
    return modes, mat, inv_l2


def classify(omega, params: ZoneParameters, K_cap: float) -> ZoneLabel:
    """Label omega resonant/nonresonant against all modes with |k|_1 <= K_cap.

    Resonant iff the minimal hyperplane distance is < alpha; the witness is
    the minimizing mode (ties: smallest l1 norm, then lexicographic).
    """
    if K_cap > params.K:
        raise ValueError("K_cap must not exceed params.K")
    om = np.asarray(omega, dtype=float)
    modes, mat, inv_l2 = _mode_table(om.shape[0], math.floor(K_cap))
    dists = np.abs(mat @ om) * inv_l2
    imin = int(np.argmin(dists))
    dmin = float(dists[imin])
    if dmin < params.alpha:
        return ZoneLabel(RESONANT, modes[imin], dmin)
    return ZoneLabel(NONRESONANT, None, dmin)


def classify_many(omegas, params: ZoneParameters, K_cap: float):
    """Vectorized form of `classify` over rows of omegas.

    Returns (resonant_mask, witness_index, min_distance); witness_index points
    into list(enumerate_modes(n, K_cap)) and is -1 for nonresonant rows.
    """
    if K_cap > params.K:
        raise ValueError("K_cap must not exceed params.K")
    om = np.asarray(omegas, dtype=float)
    modes, mat, inv_l2 = _mode_table(om.shape[1], math.floor(K_cap))
    dists = np.abs(om @ mat.T) * inv_l2
    idx = np.argmin(dists, axis=1)
    dmin = dists[np.arange(om.shape[0]), idx]
    mask = dmin < params.alpha
    widx = np.where(mask, idx, -1)
    return mask, widx, dmin


def is_nonresonant_mod(omega, K: float, alpha: float,
                       module: ResonanceModule | None) -> bool:
    """True iff |k . omega| > alpha for every |k|_1 <= K outside the module.

    Note the test is on |k . omega| itself (not divided by ||k||), matching
    the small-divisor condition rather than the zone-map distance.
    """
    if module is not None and module.rank > 0 and not module.maximal:
        raise ValueError("module must be maximal")
    om = np.asarray(omega, dtype=float)
    n = om.shape[0]
    modes, mat, _ = _mode_table(n, math.floor(K))
    vals = np.abs(mat @ om)
    for i in np.nonzero(vals <= alpha)[0]:
        k = modes[int(i)]
        if module is None or module.rank == 0 or not module.contains(k):
            return False
    return True


def rational_in_interval(a: float, b: float, K: float) -> tuple[int, int]:
    """Irreducible p/q in [a, b] with K < q < 3/(b - a).

    Scans the grid m/Q, Q just below 3/(b-a): of two consecutive grid points
    inside the interval, at most one can reduce to a denominator <= K, so the
    first valid candidate (scanning m upward) is returned.
    """
    if not (-1.0 <= a < b <= 1.0):
        raise ValueError("interval must be contained in [-1, 1]")
    length = b - a
    if not 0.0 < K * K < 2.0 / length:
        raise ValueError("hypothesis")
    Q = math.floor(3.0 / length)
    if Q >= 3.0 / length:
        # 3/length integral: step back one to keep q < 3/length strict.
        Q -= 1
    af = Fraction(a)
    bf = Fraction(b)
    m = math.ceil(af * Q)
    while Fraction(m + 1, Q) <= bf:
        if Fraction(m, Q) >= af:
            for mm in (m, m + 1):
                g = math.gcd(abs(mm), Q)
                q = Q // g
                if q > K:
                    return mm // g, q
        m += 1
    raise ValueError("hypothesis")
