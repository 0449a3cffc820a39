"""Additive compound matrices and rank-one projection limits."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .ratlinalg import ZERO, RatMatrix, dot, to_fraction, vec


class BadKError(ValueError):
    pass


class NotStrictlyStableError(ValueError):
    """Raised when ``w^T v >= 0``; a zero value means linear growth."""

    def __init__(self, wtv: Fraction):
        kind = "linear growth" if wtv == 0 else "exponential growth"
        super().__init__(f"rank-one factor has w^T v = {wtv} >= 0 ({kind})")
        self.wtv = wtv


@dataclass(frozen=True)
class PairIndexMap:
    """Lexicographic index sets ``i_1 < ... < i_k`` (0-based)."""

    m: int
    k: int
    subsets: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, m: int, k: int = 2) -> PairIndexMap:
        return cls(m, k, tuple(combinations(range(m), k)))

    def index(self, subset: Sequence[int]) -> int:
        return self.subsets.index(tuple(subset))

    def __len__(self) -> int:
        return len(self.subsets)


@dataclass(frozen=True)
class CompoundMatrix:
    base_dim: int
    k: int
    matrix: RatMatrix
    index_map: PairIndexMap


def _compound_entries(get, m: int, k: int, zero):
    subsets = list(combinations(range(m), k))
    pos = {s: n for n, s in enumerate(subsets)}
    size = len(subsets)
    out = [[zero] * size for _ in range(size)]
    for r, I in enumerate(subsets):
        out[r][r] = sum((get(i, i) for i in I), zero)
        for s_pos, i_s in enumerate(I):
            rest = I[:s_pos] + I[s_pos + 1:]
            for j in range(m):
                if j in I:
                    continue
                J = tuple(sorted(rest + (j,)))
                l_pos = J.index(j)
                a = get(i_s, j)
                if a:
                    out[r][pos[J]] += a if (s_pos + l_pos) % 2 == 0 else -a
    return subsets, out


def additive_compound(A: RatMatrix, k: int = 2) -> CompoundMatrix:
    """k-th additive compound by the entrywise three-case rule.

    Diagonal entries sum the diagonal of ``A`` over the index set; entries whose
    index sets differ in exactly one position ``i_s`` vs ``j_l`` equal
    ``(-1)^(l+s) A[i_s, j_l]``; all others vanish.
    """
    m, m2 = A.shape
    if m != m2:
        raise ValueError("additive compound needs a square matrix")
    if not 1 <= k <= m:
        raise BadKError(f"k={k} outside 1..{m}")
    rows = A.rows
    subsets, out = _compound_entries(lambda i, j: rows[i][j], m, k, ZERO)
    return CompoundMatrix(m, k, RatMatrix(out, ncols=len(subsets)), PairIndexMap(m, k, tuple(subsets)))


def additive_compound_float(A: np.ndarray, k: int = 2) -> np.ndarray:
    """Floating-point twin of :func:`additive_compound`."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if not 1 <= k <= m:
        raise BadKError(f"k={k} outside 1..{m}")
    _, out = _compound_entries(lambda i, j: A[i, j], m, k, 0.0)
    return np.array(out, dtype=float).reshape(len(out), len(out))


def _check_stable(v: Sequence, w: Sequence) -> Fraction:
    a = dot(vec(w), vec(v))
    if a >= 0:
        raise NotStrictlyStableError(a)
    return a


def rank_one_projection(v: Sequence, w: Sequence) -> RatMatrix:
    """``lim e^{vw^T t} = I - v w^T / (w^T v)`` for ``w^T v < 0``."""
    v, w = vec(v), vec(w)
    a = _check_stable(v, w)
    return RatMatrix.identity(len(v)) - RatMatrix.outer(v, w) / a


def rank_one_compound_projection(v: Sequence, w: Sequence) -> RatMatrix:
    """``lim e^{(vw^T)^(2) t} = I - (vw^T)^(2) / (w^T v)``."""
    v, w = vec(v), vec(w)
    a = _check_stable(v, w)
    A2 = additive_compound(RatMatrix.outer(v, w), 2).matrix
    return RatMatrix.identity(A2.nrows) - A2 / a


def rank_one_expm(v: Sequence, w: Sequence, t: float) -> np.ndarray:
    """``e^{vw^T t}`` in closed form (floating point)."""
    v = np.array([float(to_fraction(x)) for x in v])
    w = np.array([float(to_fraction(x)) for x in w])
    a = float(w @ v)
    if a == 0.0:
        scale = t
    else:
        scale = np.expm1(a * t) / a
    return np.eye(len(v)) + np.outer(v, w) * scale


def is_idempotent(P: RatMatrix) -> bool:
    return P @ P == P

