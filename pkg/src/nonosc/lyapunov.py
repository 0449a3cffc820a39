"""Piecewise-linear common Lyapunov functions for cone LDIs.

``V(z) = max_k c_k^T z`` is built either by the iterative row-appending
construction (:func:`algorithm1`) or by closing the row set under the
limit projections ``Pi_l`` (:func:`closure_builder`).  Both results are
checked independently: :func:`verify_conic` by exact Farkas multipliers,
:func:`verify_discrete` by convex-hull dominance under every ``Pi_l``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ratlinalg import (
    ZERO,
    RatMatrix,
    RatVector,
    conic_membership,
    convex_membership,
    rank,
    unit,
    vec,
)

SPECTRAL_MARGIN = 1e-6
MAX_SQUARINGS = 20


class ConstructionError(RuntimeError):
    pass


class NotConvergedError(ConstructionError):
    def __init__(self, message: str, trajectory: Sequence[int] = ()):
        super().__init__(message)
        self.trajectory = list(trajectory)


class UnboundedError(ConstructionError):
    def __init__(self, witness: InstabilityWitness):
        super().__init__(f"LDI is unstable: {witness.describe()}")
        self.witness = witness


@dataclass(frozen=True)
class PWLFunction:
    dim: int
    rows: tuple[RatVector, ...]

    @classmethod
    def infinity_norm(cls, dim: int) -> PWLFunction:
        return cls(dim, tuple(unit(dim, i) for i in range(dim)) + tuple(unit(dim, i, -1) for i in range(dim)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], dim: int | None = None) -> PWLFunction:
        rows = [vec(r) for r in rows]
        out: list[RatVector] = []
        for r in rows:
            if r not in out:
                out.append(r)
        return cls(dim if dim is not None else len(out[0]), tuple(out))

    def __len__(self) -> int:
        return len(self.rows)

    def matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows], dtype=float).reshape(len(self.rows), self.dim)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Evaluate on a vector, or on a batch with the last axis of size ``dim``."""
        z = np.asarray(z, dtype=float)
        return np.max(z @ self.matrix().T, axis=-1)

    def has_unit_rows(self) -> bool:
        present = set(self.rows)
        return all(unit(self.dim, i) in present and unit(self.dim, i, -1) in present for i in range(self.dim))

    def is_symmetric(self) -> bool:
        present = set(self.rows)
        return all(tuple(-x for x in r) in present for r in self.rows)

    def essential(self) -> PWLFunction:
        """Drop rows in the convex hull of the others; ``+-e_i`` are kept."""
        units = {unit(self.dim, i, s) for i in range(self.dim) for s in (1, -1)}
        kept = list(self.rows)
        for r in reversed(self.rows):
            if r in units:
                continue
            others = [q for q in kept if q != r]
            if convex_membership(r, others):
                kept = others
        return PWLFunction(self.dim, tuple(kept))

    def to_strings(self) -> list[list[str]]:
        return RatMatrix(self.rows, ncols=self.dim).to_strings()


class WitnessKind(str, enum.Enum):
    SPECTRAL_RADIUS_WORD = "SpectralRadiusWord"
    DEFECTIVE_CONIC_SUM = "DefectiveConicSum"


@dataclass(frozen=True)
class InstabilityWitness:
    """Certificate that an LDI is not Lyapunov stable.

    ``letters`` are 0-based generator indices: a word of projections for
    :attr:`WitnessKind.SPECTRAL_RADIUS_WORD` (product ``Pi_{w_1} ... Pi_{w_L}``),
    or the subset summed for :attr:`WitnessKind.DEFECTIVE_CONIC_SUM`.
    """

    kind: WitnessKind
    letters: tuple[int, ...]
    spectral_radius: float | None = None
    ranks: tuple[int, int] | None = None
    squarings: int | None = None

    def describe(self) -> str:
        names = ", ".join(f"A{i + 1}" for i in self.letters)
        if self.kind is WitnessKind.SPECTRAL_RADIUS_WORD:
            return (
                f"product of projections [{names}] (length {len(self.letters)}) "
                f"has spectral radius {self.spectral_radius:.9g} > 1"
            )
        return f"sum of {{{names}}} has a defective zero eigenvalue (rank {self.ranks[0]} > rank of square {self.ranks[1]})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "letters": [i + 1 for i in self.letters],
            "spectral_radius": None if self.spectral_radius is None else repr(float(self.spectral_radius)),
            "ranks": None if self.ranks is None else list(self.ranks),
            "squarings": self.squarings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> InstabilityWitness:
        return cls(
            WitnessKind(d["kind"]),
            tuple(i - 1 for i in d["letters"]),
            None if d["spectral_radius"] is None else float(d["spectral_radius"]),
            None if d["ranks"] is None else tuple(d["ranks"]),
            d["squarings"],
        )


@dataclass
class ConicReport:
    ok: bool
    multipliers: dict[tuple[int, int], RatVector] = field(default_factory=dict)
    failures: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class LasalleReport:
    """Rank data for ``M_i = [A_1^T c_i, ..., A_s^T c_i]``.

    :attr:`passed` is the plain rank condition (every ``M_i`` has rank
    ``dim``).  :attr:`active_passed` is the condition the LaSalle argument
    actually consumes: no nonzero ``z`` with ``M_i^T z = 0`` at which row
    ``i`` attains the maximum.  Full rank implies it.
    """

    matrices: list[RatMatrix]
    ranks: list[int]
    dim: int
    active_kernel_trivial: list[bool] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r == self.dim for r in self.ranks)

    @property
    def active_passed(self) -> bool:
        return all(r == self.dim or ok for r, ok in zip(self.ranks, self.active_kernel_trivial))

    def deficient_rows(self) -> list[int]:
        return [i for i, r in enumerate(self.ranks) if r < self.dim]


def _dims_agree(dim: int, mats: Sequence[RatMatrix]) -> None:
    for A in mats:
        if A.shape != (dim, dim):
            raise ValueError(f"matrix of shape {A.shape} does not act on dimension {dim}")


def algorithm1(mats: Sequence[RatMatrix], max_iter: int = 100, max_rows: int = 2000) -> PWLFunction:
    """Iteratively append ``c* = c_k^T (A_l + I)`` until the row set closes.

    Rows are processed in order starting from ``+-e_i``; a full pass that adds
    nothing means success.  ``max_iter`` bounds the number of full sweeps over
    the (growing) row list and ``max_rows`` its length.  The zero row and exact
    duplicates are never added.
    """
    if not mats:
        raise ValueError("need at least one matrix")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    dim = mats[0].nrows
    _dims_agree(dim, mats)
    rows = list(PWLFunction.infinity_norm(dim).rows)
    seen = set(rows)
    trajectory = [len(rows)]
    k = 0
    for _ in range(max_iter):
        end = len(rows)
        while k < end:
            c = rows[k]
            for A in mats:
                cA = A.rapply(c)
                if not any(cA):
                    continue
                new = tuple(a + b for a, b in zip(c, cA))
                if any(new) and new not in seen:
                    seen.add(new)
                    rows.append(new)
                    if len(rows) > max_rows:
                        trajectory.append(len(rows))
                        raise NotConvergedError(f"row budget {max_rows} exhausted", trajectory)
            k += 1
        trajectory.append(len(rows))
        if k == len(rows):
            V = PWLFunction(dim, tuple(rows))
            if not verify_conic(V, mats).ok:
                raise ConstructionError("closed row set failed the conic verification")
            return V
    raise NotConvergedError(f"no closure after {max_iter} sweeps ({len(rows)} rows)", trajectory)


def closure_builder(
    projections: Sequence[RatMatrix],
    max_words: int = 2000,
    max_len: int = 6,
) -> PWLFunction:
    """Close ``+-e_i`` under ``c -> Pi_l^T c`` keeping only non-dominated rows.

    Level ``d`` of the breadth-first search holds images under words of
    length ``d``.  Before descending past level ``d`` the words of that length
    are screened for spectral radius above one; a confirmed hit raises
    :class:`UnboundedError`.  ``max_words`` caps the number of rows.
    """
    if not projections:
        raise ValueError("need at least one projection")
    dim = projections[0].nrows
    _dims_agree(dim, projections)
    rows = list(PWLFunction.infinity_norm(dim).rows)
    frontier = list(rows)
    screen = _WordScreen(projections)
    for depth in range(1, max_len + 1):
        nxt = []
        for c in frontier:
            for P in projections:
                img = P.rapply(c)
                if not any(img) or img in rows:
                    continue
                if convex_membership(img, rows):
                    continue
                rows.append(img)
                nxt.append(img)
                if len(rows) > max_words:
                    raise NotConvergedError(f"row budget {max_words} exhausted", [len(rows)])
        if not nxt:
            return PWLFunction(dim, tuple(rows))
        witness = screen.level(depth)
        if witness is not None:
            raise UnboundedError(witness)
        frontier = nxt
    raise NotConvergedError(f"no closure within words of length {max_len} ({len(rows)} rows)", [len(rows)])


def verify_conic(V: PWLFunction, mats: Sequence[RatMatrix]) -> ConicReport:
    """Check ``-c_k^T A_l in cone{c_k - c_j : j != k}`` for every ``k, l``."""
    _dims_agree(V.dim, mats)
    report = ConicReport(ok=True)
    for k, c in enumerate(V.rows):
        gens = [tuple(a - b for a, b in zip(c, q)) for j, q in enumerate(V.rows) if j != k]
        for l, A in enumerate(mats):
            target = tuple(-x for x in A.rapply(c))
            ok, lam = conic_membership(target, gens)
            if ok:
                full = list(lam)
                full.insert(k, ZERO)
                report.multipliers[(k, l)] = tuple(full)
            else:
                report.ok = False
                report.failures.append((k, l))
    return report


def verify_discrete(V: PWLFunction, projections: Sequence[RatMatrix]) -> bool:
    """Check ``V(Pi_l z) <= V(z)`` via ``Pi_l^T c_k in conv{c_j}``."""
    _dims_agree(V.dim, projections)
    for c in V.rows:
        for P in projections:
            if not convex_membership(P.rapply(c), V.rows):
                return False
    return True


def lasalle_check(V: PWLFunction, mats: Sequence[RatMatrix]) -> LasalleReport:
    """Rank test on ``M_i = [A_1^T c_i, ..., A_s^T c_i]`` for every row.

    Rank-deficient rows additionally get the exact active-region test of
    :func:`active_kernel_trivial`.
    """
    if not mats:
        raise ValueError("need at least one matrix")
    _dims_agree(V.dim, mats)
    matrices, ranks, active = [], [], []
    for k, c in enumerate(V.rows):
        cols = [A.rapply(c) for A in mats]
        M = RatMatrix.from_columns(cols, nrows=V.dim)
        r = rank(M)
        matrices.append(M)
        ranks.append(r)
        active.append(True if r == V.dim else active_kernel_trivial(V, k, cols))
    return LasalleReport(matrices, ranks, V.dim, active)


def active_kernel_trivial(V: PWLFunction, k: int, cols: Sequence[RatVector]) -> bool:
    """True iff no ``z`` has ``c_j^T z = 0`` for all ``c_j`` in ``cols`` while
    ``c_k^T z = V(z) = 1``.

    Decided as LP feasibility in the variables ``z+, z- >= 0`` and slacks for
    ``(c_k - c_i)^T z >= 0``.
    """
    c = V.rows[k]
    others = [q for i, q in enumerate(V.rows) if i != k]
    n = V.dim
    eq_rows: list[tuple[RatVector, list[Fraction]]] = []
    for col in cols:
        if any(col):
            eq_rows.append((col, []))
    diffs = [tuple(a - b for a, b in zip(c, q)) for q in others]
    m_eq, m_ineq = len(eq_rows), len(diffs)
    height = m_eq + m_ineq + 1
    generators = []
    for j in range(n):
        column = [r[j] for r, _ in eq_rows] + [d[j] for d in diffs] + [c[j]]
        generators.append(tuple(column))
        generators.append(tuple(-x for x in column))
    for i in range(m_ineq):
        generators.append(tuple(Fraction(-1) if row == m_eq + i else ZERO for row in range(height)))
    target = (ZERO,) * (height - 1) + (Fraction(1),)
    feasible, _ = conic_membership(target, generators)
    return not feasible


def function_equiv(V1: PWLFunction, V2: PWLFunction) -> bool:
    """Same function iff each row set lies in the convex hull of the other."""
    if V1.dim != V2.dim:
        raise ValueError("dimension mismatch")
    return all(convex_membership(r, V2.rows) for r in V1.rows) and all(
        convex_membership(r, V1.rows) for r in V2.rows
    )


def _exact_growth(P: RatMatrix) -> int | None:
    """Smallest ``j <= 20`` with ``max|P^(2^j)| > 2 dim max|P|``, if any."""
    bound = 2 * P.nrows * max(abs(x) for r in P.rows for x in r)
    if bound == 0:
        return None
    Q = P
    for j in range(1, MAX_SQUARINGS + 1):
        Q = Q @ Q
        if max(abs(x) for r in Q.rows for x in r) > bound:
            return j
    return None


class _WordScreen:
    """Level-by-level spectral radius screen over products of projections."""

    def __init__(self, projections: Sequence[RatMatrix]):
        self.exact = list(projections)
        self.floats = np.stack([P.to_numpy() for P in projections])
        self.s = len(projections)
        self._words: list[tuple[int, ...]] = [()]
        self._prods = np.eye(self.floats.shape[1])[None, :, :]
        self._depth = 0

    def _extend(self) -> None:
        # skipping repeated adjacent letters is safe: every Pi is idempotent
        pairs = [
            (idx, a)
            for idx, w in enumerate(self._words)
            for a in range(self.s)
            if not (w and w[-1] == a)
        ]
        prefix_idx = [p for p, _ in pairs]
        letter_idx = [a for _, a in pairs]
        self._prods = np.einsum("nij,njk->nik", self._prods[prefix_idx], self.floats[letter_idx])
        self._words = [self._words[p] + (a,) for p, a in pairs]
        self._depth += 1

    def level(self, length: int) -> InstabilityWitness | None:
        while self._depth < length:
            self._extend()
        if not self._words:
            return None
        radii = np.max(np.abs(np.linalg.eigvals(self._prods)), axis=-1)
        for n in np.flatnonzero(radii > 1 + SPECTRAL_MARGIN):
            word = self._words[n]
            P = self.exact[word[0]]
            for a in word[1:]:
                P = P @ self.exact[a]
            j = _exact_growth(P)
            if j is not None:
                return InstabilityWitness(WitnessKind.SPECTRAL_RADIUS_WORD, word, float(radii[n]), squarings=j)
        return None


def spectral_word_witness(projections: Sequence[RatMatrix], max_len: int = 6) -> InstabilityWitness | None:
    """Shortest, then lexicographically first, confirmed word with spectral radius > 1."""
    if not projections:
        return None
    screen = _WordScreen(projections)
    for length in range(1, max_len + 1):
        w = screen.level(length)
        if w is not None:
            return w
    return None


def defective_sum_witness(mats: Sequence[RatMatrix], max_size: int = 2) -> InstabilityWitness | None:
    """First subset sum (by size, then lexicographic) with a defective zero eigenvalue."""
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(range(len(mats)), size):
            M = mats[subset[0]]
            for i in subset[1:]:
                M = M + mats[i]
            r1 = rank(M)
            if r1 == M.nrows:
                continue
            r2 = rank(M @ M)
            if r2 < r1:
                return InstabilityWitness(WitnessKind.DEFECTIVE_CONIC_SUM, subset, ranks=(r1, r2))
    return None


def detect_instability(
    mats: Sequence[RatMatrix],
    projections: Sequence[RatMatrix],
    max_len: int = 6,
) -> InstabilityWitness | None:
    """Projection-word screen first, then the defective conic-sum screen.

    ``None`` means no witness was found, not that the LDI is stable.
    """
    return spectral_word_witness(projections, max_len) or defective_sum_witness(mats)


def scaled(mats: Sequence[RatMatrix], factor: Fraction | int) -> list[RatMatrix]:
    return [A * factor for A in mats]
