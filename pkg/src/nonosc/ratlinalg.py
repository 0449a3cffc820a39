"""Exact rational linear algebra.

Everything here works on :class:`fractions.Fraction` entries.  Vectors are
plain tuples of fractions; matrices are immutable :class:`RatMatrix`
objects.  The feasibility kernels (:func:`conic_membership`,
:func:`convex_membership`) run a phase-one simplex with Bland's rule, so
they terminate on degenerate cones and never round.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from itertools import combinations
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

RatVector = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class SingularMatrixError(ValueError):
    """Raised by :func:`invert` on a singular input."""

    def __init__(self, rank: int, size: int):
        super().__init__(f"matrix is singular (rank {rank} < {size})")
        self.rank = rank
        self.size = size


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x)).limit_denominator(10**12)
    if isinstance(x, np.integer):
        return Fraction(int(x))
    return Fraction(x)


def vec(values: Iterable) -> RatVector:
    return tuple(to_fraction(v) for v in values)


def format_fraction(x: Fraction) -> str:
    """Render ``x`` as ``"p/q"``, or ``"p"`` when integral."""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class RatMatrix:
    """Dense immutable matrix of rationals."""

    __slots__ = ("_rows", "_ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        self._rows = tuple(vec(r) for r in rows)
        if self._rows:
            width = len(self._rows[0])
            if any(len(r) != width for r in self._rows):
                raise ValueError("ragged rows")
            if ncols is not None and ncols != width:
                raise ValueError("ncols disagrees with row width")
            self._ncols = width
        else:
            self._ncols = 0 if ncols is None else ncols

    @classmethod
    def identity(cls, n: int) -> RatMatrix:
        return cls(((ONE if i == j else ZERO) for j in range(n)) for i in range(n))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> RatMatrix:
        return cls(((ZERO,) * ncols for _ in range(nrows)), ncols=ncols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int | None = None) -> RatMatrix:
        if not columns:
            return cls.zeros(nrows or 0, 0)
        return cls(zip(*columns))

    @classmethod
    def outer(cls, v: Sequence, w: Sequence) -> RatMatrix:
        v, w = vec(v), vec(w)
        return cls((a * b for b in w) for a in v)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self._rows), self._ncols

    @property
    def nrows(self) -> int:
        return len(self._rows)

    @property
    def ncols(self) -> int:
        return self._ncols

    @property
    def rows(self) -> tuple[RatVector, ...]:
        return self._rows

    def row(self, i: int) -> RatVector:
        return self._rows[i]

    def col(self, j: int) -> RatVector:
        return tuple(r[j] for r in self._rows)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self._rows[i][j]

    def __iter__(self):
        return iter(self._rows)

    @property
    def T(self) -> RatMatrix:
        return RatMatrix(zip(*self._rows), ncols=self.nrows) if self._rows else RatMatrix.zeros(self._ncols, 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self.shape, self._rows))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_fraction(x) for x in r) for r in self._rows)
        return f"RatMatrix([{body}])"

    def __add__(self, other: RatMatrix) -> RatMatrix:
        self._check_same_shape(other)
        return RatMatrix(
            (tuple(a + b for a, b in zip(r, s)) for r, s in zip(self._rows, other._rows)),
            ncols=self._ncols,
        )

    def __sub__(self, other: RatMatrix) -> RatMatrix:
        self._check_same_shape(other)
        return RatMatrix(
            (tuple(a - b for a, b in zip(r, s)) for r, s in zip(self._rows, other._rows)),
            ncols=self._ncols,
        )

    def __neg__(self) -> RatMatrix:
        return RatMatrix((tuple(-a for a in r) for r in self._rows), ncols=self._ncols)

    def __mul__(self, scalar) -> RatMatrix:
        s = to_fraction(scalar)
        return RatMatrix((tuple(s * a for a in r) for r in self._rows), ncols=self._ncols)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> RatMatrix:
        return self * (ONE / to_fraction(scalar))

    def __matmul__(self, other: RatMatrix) -> RatMatrix:
        if self._ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = other.T.rows
        return RatMatrix(
            (tuple(sum((a * b for a, b in zip(r, c) if a and b), ZERO) for c in cols) for r in self._rows),
            ncols=other.ncols,
        )

    def apply(self, x: Sequence) -> RatVector:
        """Matrix-vector product ``M x``."""
        return tuple(dot(r, x) for r in self._rows)

    def rapply(self, y: Sequence) -> RatVector:
        """Row-vector product ``yᵀ M``."""
        out = [ZERO] * self._ncols
        for yi, r in zip(y, self._rows):
            if yi:
                for j, a in enumerate(r):
                    if a:
                        out[j] += yi * a
        return tuple(out)

    def is_zero(self) -> bool:
        return all(a == 0 for r in self._rows for a in r)

    def trace(self) -> Fraction:
        return sum((self._rows[i][i] for i in range(min(self.shape))), ZERO)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(a) for a in r] for r in self._rows], dtype=float).reshape(self.shape)

    def to_strings(self) -> list[list[str]]:
        return [[format_fraction(a) for a in r] for r in self._rows]

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], ncols: int | None = None) -> RatMatrix:
        return cls(((Fraction(s) for s in r) for r in rows), ncols=ncols)

    def _check_same_shape(self, other: RatMatrix) -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), ZERO)


def primitive_integer(v: Sequence[Fraction]) -> RatVector:
    """Scale ``v`` to integer entries with gcd 1, keeping its direction."""
    v = vec(v)
    if all(x == 0 for x in v):
        return v
    den = reduce(lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(i) for i in ints if i), 0)
    return tuple(Fraction(i // g) for i in ints)


def _integer_rows(M: RatMatrix) -> list[list[int]]:
    out = []
    for r in M.rows:
        den = reduce(lcm, (x.denominator for x in r), 1)
        out.append([int(x * den) for x in r])
    return out


def rank(M: RatMatrix) -> int:
    """Exact rank by fraction-free (Bareiss) elimination."""
    a = _integer_rows(M)
    nrows, ncols = M.shape
    r = 0
    prev = 1
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == nrows:
            break
    return r


def rref(M: RatMatrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = [list(r) for r in M.rows]
    nrows, ncols = M.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def kernel_basis(M: RatMatrix) -> list[RatVector]:
    """Basis of the right null space, one primitive integer vector per free column."""
    ncols = M.ncols
    a, pivots = rref(M)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        x = [ZERO] * ncols
        x[f] = ONE
        for row, p in enumerate(pivots):
            x[p] = -a[row][f]
        basis.append(primitive_integer(x))
    return basis


def nonneg_kernel_rays(M: RatMatrix) -> list[RatVector]:
    """Extreme rays of ``{x >= 0 : M x = 0}`` via the double description method.

    The cone starts as the nonnegative orthant and is cut by one hyperplane
    at a time.  A positive/negative pair of rays is combined only when it is
    adjacent, which for this cone is the combinatorial test "no other ray
    has support inside the union of the two supports".

    Rays are returned as primitive integer vectors sorted by support and then
    by entries.
    """
    n = M.ncols
    rays: list[list[int]] = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    for h in _integer_rows(M):
        vals = [sum(hi * ri for hi, ri in zip(h, r)) for r in rays]
        zero = [r for r, v in zip(rays, vals) if v == 0]
        pos = [(r, v) for r, v in zip(rays, vals) if v > 0]
        neg = [(r, v) for r, v in zip(rays, vals) if v < 0]
        supports = [frozenset(i for i, x in enumerate(r) if x) for r in rays]
        new = list(zero)
        for (p, vp), (q, vq) in ((a, b) for a in pos for b in neg):
            sp = frozenset(i for i, x in enumerate(p) if x)
            sq = frozenset(i for i, x in enumerate(q) if x)
            union = sp | sq
            if any(s <= union and s != sp and s != sq for s in supports):
                continue
            combo = [(-vq) * a + vp * b for a, b in zip(p, q)]
            g = reduce(gcd, combo, 0)
            new.append([x // g for x in combo])
        rays = _dedupe_int_rays(new)
    out = [tuple(Fraction(x) for x in r) for r in rays if any(r)]
    out.sort(key=lambda r: (tuple(i for i, x in enumerate(r) if x), r))
    return out


def _dedupe_int_rays(rays: list[list[int]]) -> list[list[int]]:
    seen = set()
    out = []
    for r in rays:
        t = tuple(r)
        if t not in seen:
            seen.add(t)
            out.append(r)
    return out


def invert(M: RatMatrix) -> RatMatrix:
    """Exact inverse by Gauss-Jordan elimination."""
    n, m = M.shape
    if n != m:
        raise ValueError(f"cannot invert non-square matrix of shape {M.shape}")
    a = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(M.rows)]
    for c in range(n):
        pivot = next((i for i in range(c, n) if a[i][c] != 0), None)
        if pivot is None:
            raise SingularMatrixError(rank(M), n)
        a[c], a[pivot] = a[pivot], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return RatMatrix((r[n:] for r in a), ncols=n)


def _phase_one(columns: Sequence[RatVector], target: RatVector) -> RatVector | None:
    """Find ``lam >= 0`` with ``sum lam_j columns_j = target`` or return None.

    Phase-one simplex on the tableau ``[G | I | b]`` with artificial slack,
    Bland's rule for both entering and leaving variables.
    """
    m = len(columns)
    n = len(target)
    if n == 0:
        return (ZERO,) * m
    rows = []
    for i in range(n):
        sign = -1 if target[i] < 0 else 1
        coeffs = [sign * columns[j][i] for j in range(m)]
        art = [ONE if k == i else ZERO for k in range(n)]
        rows.append(coeffs + art + [sign * target[i]])
    basis = [m + i for i in range(n)]
    width = m + n
    # reduced costs of the phase-one objective sum(artificials)
    cost = [-sum((rows[i][j] for i in range(n)), ZERO) for j in range(width)]
    for i in range(n):
        cost[m + i] = ZERO
    obj = -sum((rows[i][-1] for i in range(n)), ZERO)

    while True:
        entering = next((j for j in range(width) if cost[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(n):
            a = rows[i][entering]
            if a > 0:
                ratio = rows[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            # unbounded direction cannot occur: the objective is bounded below by 0
            break
        r = best[1]
        p = rows[r][entering]
        rows[r] = [x / p for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][entering] != 0:
                f = rows[i][entering]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        f = cost[entering]
        cost = [c - f * y for c, y in zip(cost, rows[r][:-1])]
        obj -= f * rows[r][-1]
        basis[r] = entering

    if obj != 0:
        return None
    lam = [ZERO] * m
    for i, b in enumerate(basis):
        if b < m:
            lam[b] = rows[i][-1]
    return tuple(lam)


def conic_membership(d: Sequence, generators: Sequence[Sequence]) -> tuple[bool, RatVector | None]:
    """Decide ``d in cone(generators)``; return the multipliers when it is."""
    d = vec(d)
    gens = [vec(g) for g in generators]
    if any(len(g) != len(d) for g in gens):
        raise ValueError("dimension mismatch")
    if all(x == 0 for x in d):
        return True, (ZERO,) * len(gens)
    lam = _phase_one(gens, d)
    return (lam is not None), lam


def convex_membership(d: Sequence, points: Sequence[Sequence]) -> bool:
    """Decide ``d in conv(points)``."""
    d = vec(d)
    pts = [vec(p) for p in points]
    if not pts:
        return False
    if any(len(p) != len(d) for p in pts):
        raise ValueError("dimension mismatch")
    if d in pts:
        return True
    lam = _phase_one([p + (ONE,) for p in pts], d + (ONE,))
    return lam is not None


def independent_subset(vectors: Sequence[RatVector], start: Sequence[RatVector] = ()) -> list[RatVector]:
    """Greedily pick vectors that are independent of ``start`` and of each other."""
    chosen = list(start)
    picked = []
    for v in vectors:
        if rank(RatMatrix(chosen + [v])) == len(chosen) + 1:
            chosen.append(v)
            picked.append(v)
    return picked


def first_nonsingular_completion(top: Sequence[RatVector], n: int, k: int) -> tuple[int, ...] | None:
    """Lexicographically first index set ``S`` (``|S| = k``) such that stacking
    ``top`` over the unit rows ``e_i, i in S`` gives a nonsingular matrix."""
    for subset in combinations(range(n), k):
        rows = list(top) + [unit(n, i) for i in subset]
        if rank(RatMatrix(rows, ncols=n)) == n:
            return subset
    return None


def unit(n: int, i: int, sign: int = 1) -> RatVector:
    return tuple(Fraction(sign) if j == i else ZERO for j in range(n))
