"""Conservation laws, the coordinate transform and the rank-one embedding.

The transform stacks ``c`` conservation rows over unit rows for the chosen
independent species.  In the new coordinates the first ``c`` components are
constant, the rest follow ``Gamma_r R(x)``, and the reduced Jacobian splits
into one rank-one matrix ``A_l = v_l w_l^T`` per reaction-reactant pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .netmodel import Network, reactant_pairs, stoichiometry_matrix
from .ratlinalg import (
    RatMatrix,
    RatVector,
    SingularMatrixError,
    dot,
    first_nonsingular_completion,
    independent_subset,
    invert,
    kernel_basis,
    nonneg_kernel_rays,
    rank,
    unit,
)


class ReductionError(ValueError):
    pass


class SingularTransformError(ReductionError):
    pass


class BadCardinalityError(ReductionError):
    pass


@dataclass(frozen=True)
class ConservationBasis:
    rows: tuple[RatVector, ...]
    nonneg_rays: tuple[RatVector, ...]

    @property
    def c(self) -> int:
        return len(self.rows)

    def covered_species(self) -> set[int]:
        """Species in the support of some nonnegative conservation law."""
        return {i for r in self.nonneg_rays for i, x in enumerate(r) if x}


@dataclass(frozen=True)
class ReducedSystem:
    T: RatMatrix
    T_inv: RatMatrix
    gamma_r: RatMatrix
    independent: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    factors: tuple[tuple[RatVector, RatVector], ...]
    basis: ConservationBasis
    gamma: RatMatrix
    alpha: RatMatrix

    @property
    def c(self) -> int:
        return self.basis.c

    @property
    def dim(self) -> int:
        """Dimension ``n - c`` of the evolving coordinates."""
        return self.T.nrows - self.c

    def lift(self) -> RatMatrix:
        """``T^{-1} [0; I]``: how full concentrations move with the reduced state."""
        c = self.c
        return RatMatrix((r[c:] for r in self.T_inv.rows), ncols=self.dim)

    def wtv(self) -> list[Fraction]:
        return [dot(w, v) for v, w in self.factors]


def conservation_laws(gamma: RatMatrix) -> ConservationBasis:
    """Basis of ``Ker(Gamma^T)``, taken from nonnegative extreme rays when
    they span the kernel and completed with general kernel vectors otherwise."""
    gt = gamma.T
    rays = nonneg_kernel_rays(gt)
    general = kernel_basis(gt)
    c = len(general)
    rows = independent_subset(rays)[:c]
    if len(rows) < c:
        rows = rows + independent_subset(general, start=rows)
    return ConservationBasis(tuple(rows), tuple(rays))


def build_reduction(
    net: Network,
    gamma: RatMatrix | None = None,
    basis: ConservationBasis | None = None,
    independent: Sequence[int | str] | None = None,
) -> ReducedSystem:
    """Assemble ``T``, ``T^{-1}``, ``Gamma_r`` and the rank-one factors.

    ``independent`` lists the species kept as coordinates, in the order they
    should appear.  When omitted, the lexicographically first subset making
    ``T`` nonsingular is used.
    """
    if gamma is None:
        gamma = stoichiometry_matrix(net)
    if basis is None:
        basis = conservation_laws(gamma)
    n = net.n_species
    c = basis.c
    if independent is None:
        chosen = first_nonsingular_completion(basis.rows, n, n - c)
        if chosen is None:
            raise SingularTransformError("no independent species set completes the conservation basis")
    else:
        chosen = tuple(net.index_of(s) if isinstance(s, str) else int(s) for s in independent)
        if len(chosen) != n - c:
            raise BadCardinalityError(f"need {n - c} independent species, got {len(chosen)}")
        if len(set(chosen)) != len(chosen):
            raise BadCardinalityError("independent species repeat")

    T = RatMatrix(list(basis.rows) + [unit(n, i) for i in chosen], ncols=n)
    try:
        T_inv = invert(T)
    except SingularMatrixError as exc:
        names = [net.species[i].name for i in chosen]
        raise SingularTransformError(f"independent species {names} do not complete the basis ({exc})") from None

    tg = T @ gamma
    if any(x != 0 for r in tg.rows[:c] for x in r):
        raise ReductionError("conservation rows are not in Ker(Gamma^T)")
    gamma_r = RatMatrix(tg.rows[c:], ncols=gamma.ncols)

    lift_rows = [r[c:] for r in T_inv.rows]
    pairs = tuple(reactant_pairs(net))
    factors = tuple((gamma_r.col(j), tuple(lift_rows[i])) for j, i in pairs)
    return ReducedSystem(T, T_inv, gamma_r, tuple(chosen), pairs, factors, basis, gamma, reactant_matrix(net))


def reactant_matrix(net: Network) -> RatMatrix:
    """``alpha[i][j]``: how many molecules of species ``i`` reaction ``j`` consumes."""
    return RatMatrix(
        ([r.reactants[i] for r in net.reactions] for i in range(net.n_species)), ncols=net.n_reactions
    )


def rank_one_matrices(rs: ReducedSystem) -> list[RatMatrix]:
    """``A_l = v_l w_l^T`` in pair order."""
    return [RatMatrix.outer(v, w) for v, w in rs.factors]


def check_factorization(rs: ReducedSystem) -> bool:
    """Every ``A_l`` has rank at most one and equals its stated factorization."""
    for A, (v, w) in zip(rank_one_matrices(rs), rs.factors):
        if rank(A) > 1 or A != RatMatrix.outer(v, w):
            return False
    return True
