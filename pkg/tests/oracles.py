"""Independent oracles for the test suite.

Everything here is deliberately implemented without touching the production
algorithms: brute-force box saturation, closed-form lattice point counts,
finite differences, random-restart slab minimization and exhaustive rational
enumeration.
"""

import math
from fractions import Fraction
from itertools import product

import numpy as np


def xgcd(a, b):
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def int_det(rows):
    """Exact small integer determinant by Laplace expansion."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [[r[c] for c in range(n) if c != j] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * int_det(minor)
    return total


def gram_det_oracle(vectors):
    vecs = [list(v) for v in vectors]
    return int_det([[sum(a * b for a, b in zip(u, w)) for w in vecs] for u in vecs])


class ZLattice:
    """Incrementally built integer lattice in row-echelon form."""

    def __init__(self, n):
        self.n = n
        self.rows = []

    def _pivot(self, row):
        for i, x in enumerate(row):
            if x:
                return i
        return None

    def add(self, vec):
        v = list(vec)
        while True:
            p = self._pivot(v)
            if p is None:
                return
            hit = None
            for idx, row in enumerate(self.rows):
                if self._pivot(row) == p:
                    hit = idx
                    break
            if hit is None:
                if v[p] < 0:
                    v = [-x for x in v]
                self.rows.append(v)
                self.rows.sort(key=self._pivot)
                return
            row = self.rows[hit]
            a, b = row[p], v[p]
            if b % a == 0:
                q = b // a
                v = [x - q * y for x, y in zip(v, row)]
            else:
                x, y, g = xgcd(a, b)
                new_row = [x * r + y * w for r, w in zip(row, v)]
                v = [(-b // g) * r + (a // g) * w for r, w in zip(row, v)]
                self.rows[hit] = new_row

    def contains(self, vec):
        v = list(vec)
        for row in self.rows:
            p = self._pivot(row)
            if v[p] == 0:
                continue
            if v[p] % row[p] != 0:
                return False
            q = v[p] // row[p]
            v = [x - q * y for x, y in zip(v, row)]
        return not any(v)

    def gram_det(self):
        return gram_det_oracle(self.rows)


def span_points_in_box(k1, k2, radius):
    """Integer points x, sup-norm <= radius, in span_R{k1, k2} (exact test).

    Membership is det(Gram(k1, k2, x)) == 0, vectorized over the box.
    """
    n = len(k1)
    a1 = np.array(k1, dtype=np.int64)
    a2 = np.array(k2, dtype=np.int64)
    axes = np.arange(-radius, radius + 1, dtype=np.int64)
    grids = np.meshgrid(*([axes] * n), indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    g11 = int(a1 @ a1)
    g12 = int(a1 @ a2)
    g22 = int(a2 @ a2)
    g1 = X @ a1
    g2 = X @ a2
    g3 = np.sum(X * X, axis=1)
    det = (g11 * (g22 * g3 - g2 * g2)
           - g12 * (g12 * g3 - g2 * g1)
           + g1 * (g12 * g2 - g22 * g1))
    return X[det == 0]


def saturation_oracle(k1, k2, radius=12):
    """Brute-force saturation: lattice generated by all span points in a box."""
    lat = ZLattice(len(k1))
    for x in span_points_in_box(k1, k2, radius):
        lat.add([int(v) for v in x])
    return lat


def l1_ball_count(n, K):
    """Number of integer points with l1 norm <= K (closed form)."""
    K = int(K)
    return sum(2 ** i * math.comb(n, i) * math.comb(K, i)
               for i in range(0, min(n, K) + 1))


def enumerate_l1_ball(n, K):
    pts = [p for p in product(range(-K, K + 1), repeat=n)
           if sum(abs(x) for x in p) <= K]
    return pts


def rationals_in_interval(a, b, qmax):
    """All irreducible p/q with 1 <= q <= qmax and a <= p/q <= b (exact)."""
    af, bf = Fraction(a), Fraction(b)
    out = []
    for q in range(1, qmax + 1):
        p = math.ceil(af * q)
        while Fraction(p, q) <= bf:
            if math.gcd(abs(p), q) == 1:
                out.append((p, q))
            p += 1
    return out


def central_diff_grad(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (fn(xp) - fn(xm)) / (2 * h)
    return out


def fd_jacobian(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fn(xp) - fn(xm)) / (2 * h))
    return np.stack(cols, axis=1)


def symplectic_defect(J):
    """||J^T Omega J - Omega||_max for the canonical form on (theta, I)."""
    n2 = J.shape[0]
    n = n2 // 2
    Omega = np.zeros((n2, n2))
    Omega[:n, n:] = np.eye(n)
    Omega[n:, :n] = -np.eye(n)
    return float(np.max(np.abs(J.T @ Omega @ J - Omega)))


def brute_min_on_slab(A, u, c, rng, n_samples=20000):
    """Random-restart minimizer of v.A.v over unit v with |v.u| <= c."""
    n = A.shape[0]
    best = math.inf
    V = rng.normal(size=(n_samples, n))
    V /= np.linalg.norm(V, axis=1)[:, None]
    proj = V @ u
    # Push samples violating the constraint onto the boundary.
    viol = np.abs(proj) > c
    W = V - proj[:, None] * u[None, :]
    Wn = np.linalg.norm(W, axis=1)
    ok = Wn > 1e-12
    root = math.sqrt(max(0.0, 1.0 - c * c))
    V[viol & ok] = (np.sign(proj)[:, None] * c * u[None, :]
                    + root * W / Wn[:, None])[viol & ok]
    keep = np.abs(V @ u) <= c + 1e-9
    vals = np.einsum("ij,jk,ik->i", V[keep], A, V[keep])
    if vals.size:
        best = float(vals.min())
    return best


def make_planted_curve(rng, K_used=5.0, n_samples=801, max_l1_k1=5,
                       max_l1_k2=30):
    """Random planted double-resonance curve (n = 3).

    The curve lies in R_{k1} and sweeps exactly one normalized component
    through an interval where some irreducible q > K_used crossing exists;
    the planted crossing itself is k2 = q e_i - sign(omega_j) p e_j.
    Returns (times, omegas, info).
    """
    n = 3
    W = 1.0
    length = 0.06  # K_used^2 = 25 < 2/0.06 = 33.3
    while True:
        idx = list(rng.permutation(n))
        i, j, m = int(idx[0]), int(idx[1]), int(idx[2])
        q = int(rng.integers(int(K_used) + 1, 30))
        pmax = min(q - 1, max_l1_k2 - q, int(0.9 * q))
        if pmax < 1:
            continue
        p = int(rng.integers(1, pmax + 1)) * (1 if rng.random() < 0.5 else -1)
        if math.gcd(abs(p), q) != 1:
            continue
        sigma = 1 if rng.random() < 0.5 else -1
        omega_star = np.zeros(n)
        omega_star[j] = sigma * W
        omega_star[i] = (p / q) * W
        k1 = rng.integers(-2, 3, size=n)
        if int(np.sum(np.abs(k1))) == 0 or int(np.sum(np.abs(k1))) > max_l1_k1:
            continue
        if k1[m] == 0:
            continue
        omega_star[m] = -(k1[i] * omega_star[i] + k1[j] * omega_star[j]) / k1[m]
        if abs(omega_star[m]) > 0.9 * W:
            continue
        if abs(omega_star[i]) > 0.92 * W:
            continue
        t_star = float(rng.uniform(0.2, 0.8))
        delta = length * W
        times = np.linspace(0.0, 1.0, n_samples)
        omegas = np.tile(omega_star, (n_samples, 1))
        omegas[:, i] += (times - t_star) * delta
        if np.any(np.max(np.abs(omegas), axis=1) > W + 1e-12):
            continue
        info = {
            "k1": [int(x) for x in k1],
            "p": p, "q": q, "i": i, "j": j, "sigma": sigma,
            "t_star": t_star, "omega_star": omega_star, "length": length,
        }
        return times, omegas, info
