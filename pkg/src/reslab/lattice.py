"""Exact integer arithmetic for resonance vectors and resonance modules.

Everything here works over Python integers, so there is no overflow and no
rounding: entry gcds, Gram determinants, saturation and membership tests are
all exact.  Floating point only appears in the final square roots and angles.
"""

from __future__ import annotations

import json
import math
import operator
from fractions import Fraction
from itertools import product


class IntVector:
    """Integer Fourier mode / resonance vector with exact arithmetic.

    The scalar norm |k| used throughout is the l1 norm; ||k|| is Euclidean.
    Both are exposed, see `norm_l1` and `norm_l2`.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = tuple(operator.index(e) for e in entries)
        if len(self.entries) < 2:
            raise ValueError("dimension must be at least 2")

    # -- container protocol -------------------------------------------------
    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other):
        return isinstance(other, IntVector) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"IntVector{self.entries}"

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return IntVector(tuple(-e for e in self.entries))

    def __add__(self, other):
        return IntVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other):
        return IntVector(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __rmul__(self, g):
        g = operator.index(g)
        return IntVector(tuple(g * e for e in self.entries))

    def dot(self, other) -> int:
        """Exact inner product with another IntVector (or iterable of ints)."""
        return sum(a * operator.index(b) for a, b in zip(self.entries, other))

    # -- norms ---------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def norm_l1(self) -> int:
        return sum(abs(e) for e in self.entries)

    @property
    def norm_sup(self) -> int:
        return max(abs(e) for e in self.entries)

    @property
    def norm_l2_sq(self) -> int:
        return sum(e * e for e in self.entries)

    @property
    def norm_l2(self) -> float:
        return math.sqrt(self.norm_l2_sq)

    @property
    def is_zero(self) -> bool:
        return all(e == 0 for e in self.entries)


def primitive_part(k: IntVector) -> tuple[IntVector, int]:
    """Factor k = g * k' with g the gcd of the entries and k' primitive."""
    if k.is_zero:
        raise ValueError("zero mode")
    g = 0
    for e in k.entries:
        g = math.gcd(g, abs(e))
    return IntVector(tuple(e // g for e in k.entries)), g


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd: returns (x, y, g) with x*a + y*b = g = gcd(a, b) >= 0."""
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


def _int_det(rows: list[list[int]]) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for i in range(n - 1):
        if a[i][i] == 0:
            for r in range(i + 1, n):
                if a[r][i] != 0:
                    a[i], a[r] = a[r], a[i]
                    sign = -sign
                    break
            else:
                return 0
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                a[r][c] = (a[r][c] * a[i][i] - a[r][i] * a[i][c]) // prev
        prev = a[i][i]
    return sign * a[-1][-1]


def gram_det(basis) -> int:
    """Exact Gram determinant det(A^T A) of the given vectors (as columns)."""
    vecs = [v if isinstance(v, IntVector) else IntVector(v) for v in basis]
    return _int_det([[u.dot(v) for v in vecs] for u in vecs])


def module_volume(basis) -> float:
    """Volume sqrt(det(A^T A)); invariant under unimodular basis change."""
    d = gram_det(basis)
    if d <= 0:
        raise ValueError("rank deficient")
    return math.sqrt(d)


def _kernel_basis(mat_rows: list[list[int]], n: int) -> list[list[int]]:
    """Basis of the integer kernel {x in Z^n : M x = 0} of an integer matrix.

    Row-reduces [M^T | I_n] with unimodular operations; rows whose leading
    block vanishes carry a kernel basis in the trailing block.
    """
    r = len(mat_rows)
    aug = [
        [mat_rows[j][i] for j in range(r)] + [1 if t == i else 0 for t in range(n)]
        for i in range(n)
    ]
    rpos = 0
    for col in range(r):
        piv = next((i for i in range(rpos, n) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[rpos], aug[piv] = aug[piv], aug[rpos]
        for i in range(rpos + 1, n):
            if aug[i][col] == 0:
                continue
            a, b = aug[rpos][col], aug[i][col]
            x, y, g = _xgcd(a, b)
            r0 = [x * p + y * q for p, q in zip(aug[rpos], aug[i])]
            r1 = [(-b // g) * p + (a // g) * q for p, q in zip(aug[rpos], aug[i])]
            aug[rpos], aug[i] = r0, r1
        rpos += 1
    return [row[r:] for row in aug[rpos:]]


class ResonanceModule:
    """A rank-d integer lattice with exact basis, volume and membership test.

    Rank 0 (the trivial module {0}) is allowed so that projection modulo the
    trivial module has a uniform representation.
    """

    __slots__ = ("dimension", "basis", "maximal", "_vol_sq")

    def __init__(self, dimension: int, basis, maximal: bool = False):
        self.dimension = int(dimension)
        vecs = tuple(v if isinstance(v, IntVector) else IntVector(v) for v in basis)
        for v in vecs:
            if v.n != self.dimension:
                raise ValueError("basis dimension mismatch")
        self._vol_sq = gram_det(vecs) if vecs else 1
        if vecs and self._vol_sq <= 0:
            raise ValueError("rank deficient")
        self.basis = vecs
        self.maximal = bool(maximal)

    @classmethod
    def trivial(cls, dimension: int) -> "ResonanceModule":
        return cls(dimension, (), maximal=True)

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def volume_sq(self) -> int:
        return self._vol_sq

    @property
    def volume(self) -> float:
        return math.sqrt(self._vol_sq)

    def contains(self, k: IntVector) -> bool:
        """Exact membership: is k an integer combination of the basis?"""
        if not isinstance(k, IntVector):
            k = IntVector(k)
        if k.n != self.dimension:
            raise ValueError("dimension mismatch")
        if k.is_zero:
            return True
        if not self.basis:
            return False
        # Solve B x = k over Q by Gaussian elimination, then check integrality.
        d = self.rank
        rows = [[Fraction(v[i]) for v in self.basis] + [Fraction(k[i])]
                for i in range(self.dimension)]
        col = 0
        for c in range(d):
            piv = next((i for i in range(col, self.dimension) if rows[i][c] != 0), None)
            if piv is None:
                continue
            rows[col], rows[piv] = rows[piv], rows[col]
            pv = rows[col][c]
            rows[col] = [x / pv for x in rows[col]]
            for i in range(self.dimension):
                if i != col and rows[i][c] != 0:
                    f = rows[i][c]
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[col])]
            col += 1
        sol = [Fraction(0)] * d
        for i in range(col):
            lead = next((c for c in range(d) if rows[i][c] == 1), None)
            if lead is not None:
                sol[lead] = rows[i][d]
        # Consistency: rows below the pivots must have zero rhs.
        for i in range(col, self.dimension):
            if rows[i][d] != 0:
                return False
        if any(x.denominator != 1 for x in sol):
            return False
        # Confirm B x = k exactly (guards against a defective pivot pattern).
        recon = [sum(int(sol[j]) * self.basis[j][i] for j in range(d))
                 for i in range(self.dimension)]
        return tuple(recon) == k.entries

    def coordinates(self, k: IntVector) -> tuple[int, ...]:
        """Integer coordinates of a member vector in the stored basis."""
        if not isinstance(k, IntVector):
            k = IntVector(k)
        d = self.rank
        rows = [[Fraction(v[i]) for v in self.basis] + [Fraction(k[i])]
                for i in range(self.dimension)]
        col = 0
        for c in range(d):
            piv = next((i for i in range(col, self.dimension) if rows[i][c] != 0), None)
            if piv is None:
                continue
            rows[col], rows[piv] = rows[piv], rows[col]
            pv = rows[col][c]
            rows[col] = [x / pv for x in rows[col]]
            for i in range(self.dimension):
                if i != col and rows[i][c] != 0:
                    f = rows[i][c]
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[col])]
            col += 1
        sol = [Fraction(0)] * d
        for i in range(col):
            lead = next((c for c in range(d) if rows[i][c] == 1), None)
            if lead is not None:
                sol[lead] = rows[i][d]
        if any(x.denominator != 1 for x in sol):
            raise ValueError("vector is not in the module")
        out = tuple(int(x) for x in sol)
        recon = [sum(out[j] * self.basis[j][i] for j in range(d))
                 for i in range(self.dimension)]
        if tuple(recon) != k.entries:
            raise ValueError("vector is not in the module")
        return out

    def spans_same_lattice(self, other: "ResonanceModule") -> bool:
        return (
            self.dimension == other.dimension
            and self.rank == other.rank
            and self.volume_sq == other.volume_sq
            and all(other.contains(v) for v in self.basis)
        )

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps(
            {
                "dimension": self.dimension,
                "basis": [list(v.entries) for v in self.basis],
                "maximal": self.maximal,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ResonanceModule":
        data = json.loads(text)
        return cls(data["dimension"], data["basis"], data.get("maximal", False))

    def __eq__(self, other):
        return (
            isinstance(other, ResonanceModule)
            and self.dimension == other.dimension
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.dimension, self.basis))

    def __repr__(self):
        rows = ", ".join(str(v.entries) for v in self.basis)
        return f"ResonanceModule(n={self.dimension}, basis=[{rows}], maximal={self.maximal})"


def saturate(generators) -> ResonanceModule:
    """Maximal module with the same real span as the generators.

    Computed by two exact integer-kernel factorizations: the saturation is the
    integer kernel of (a basis of) the orthogonal-complement lattice.
    """
    vecs = [v if isinstance(v, IntVector) else IntVector(v) for v in generators]
    if not vecs:
        raise ValueError("no generators")
    n = vecs[0].n
    d = len(vecs)
    if any(v.n != n for v in vecs):
        raise ValueError("dimension mismatch")
    if gram_det(vecs) <= 0:
        raise ValueError("rank deficient")
    if d >= n:
        raise ValueError("rank must be smaller than the dimension")
    complement = _kernel_basis([list(v.entries) for v in vecs], n)
    basis = _kernel_basis(complement, n)
    if len(basis) != d:
        raise RuntimeError("saturation rank mismatch")  # pragma: no cover
    return ResonanceModule(n, basis, maximal=True)


def bounded_basis(k1: IntVector, k2: IntVector) -> tuple[IntVector, IntVector]:
    """Basis (k1', k2') of saturate({k1, k2}) with l1 norms <= |k1|_1 + |k2|_1.

    Follows the constructive pattern k2' = s1*k1 + s2*k2 with 0 <= s1 < 1 and
    0 < s2 <= 1, and k1' the primitive part of k1.
    """
    if not isinstance(k1, IntVector):
        k1 = IntVector(k1)
    if not isinstance(k2, IntVector):
        k2 = IntVector(k2)
    mod = saturate([k1, k2])
    p = mod.coordinates(k1)
    q = mod.coordinates(k2)
    det = p[0] * q[1] - p[1] * q[0]
    g1 = math.gcd(p[0], p[1])
    s2 = Fraction(g1, abs(det))
    # Solve -p2*m1 + p1*m2 = sign(det)*g1 for integer (m1, m2).
    x, y, g = _xgcd(-p[1], p[0])
    assert g == g1
    s = 1 if det > 0 else -1
    m1, m2 = s * x, s * y
    x0 = Fraction(q[1] * m1 - q[0] * m2, det)
    # Reduce x0 modulo 1/g1 into [0, 1/g1) subset of [0, 1).
    s1 = x0 - Fraction(math.floor(x0 * g1), g1)
    new_entries = [s1 * a + s2 * b for a, b in zip(k1.entries, k2.entries)]
    if any(e.denominator != 1 for e in new_entries):
        raise RuntimeError("bounded basis construction failed")  # pragma: no cover
    k2p = IntVector(int(e) for e in new_entries)
    k1p = primitive_part(k1)[0]
    if gram_det([k1p, k2p]) != mod.volume_sq:
        raise RuntimeError("bounded basis is not a lattice basis")  # pragma: no cover
    return k1p, k2p


def sin_angle(k1: IntVector, k2: IntVector) -> float:
    """sin of the angle between two integer vectors, in (0, 1].

    Satisfies sin_angle >= 1 / (|k1|_1 |k2|_1) for independent integer vectors.
    """
    if not isinstance(k1, IntVector):
        k1 = IntVector(k1)
    if not isinstance(k2, IntVector):
        k2 = IntVector(k2)
    if k1.is_zero or k2.is_zero:
        raise ValueError("zero mode")
    a = k1.norm_l2_sq
    b = k2.norm_l2_sq
    cross = a * b - k1.dot(k2) ** 2
    if cross <= 0:
        raise ValueError("zero angle")
    return math.sqrt(cross) / math.sqrt(a * b)


def is_K_lattice(module: ResonanceModule, K: float) -> bool:
    """True iff the module has a generating set with all l1 norms <= K.

    Complete for rank <= 2 by enumerating all module vectors inside the dual
    coefficient box; higher ranks are out of scope.
    """
    if module.rank == 0:
        return True
    if module.rank == 1:
        return module.basis[0].norm_l1 <= K
    if module.rank != 2:
        raise NotImplementedError("complete search implemented for rank <= 2 only")
    b1, b2 = module.basis
    if b1.norm_l1 <= K and b2.norm_l1 <= K:
        return True
    g11, g12, g22 = b1.norm_l2_sq, b1.dot(b2), b2.norm_l2_sq
    det = module.volume_sq
    # |x| <= ||v||*||dual_1|| <= K*sqrt(g22/det) for v = x*b1 + y*b2.
    xmax = math.floor(K * math.sqrt(g22 / det)) + 1
    ymax = math.floor(K * math.sqrt(g11 / det)) + 1
    short = []
    for x in range(-xmax, xmax + 1):
        for y in range(-ymax, ymax + 1):
            if x == 0 and y == 0:
                continue
            v = IntVector(tuple(x * a + y * b for a, b in zip(b1, b2)))
            if v.norm_l1 <= K:
                short.append((x, y))
    for i, (x1, y1) in enumerate(short):
        for x2, y2 in short[i + 1:]:
            if abs(x1 * y2 - y1 * x2) == 1:
                return True
    return False


def integer_points_in_box(n: int, radius: int):
    """All integer vectors with sup-norm <= radius (test/oracle helper)."""
    return product(range(-radius, radius + 1), repeat=n)
