from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonosc.ratlinalg import (
    RatMatrix,
    SingularMatrixError,
    conic_membership,
    convex_membership,
    format_fraction,
    invert,
    kernel_basis,
    nonneg_kernel_rays,
    rank,
    unit,
)
from oracles import M, RECEPTOR_GAMMA, RECEPTOR_RAYS, RECEPTOR_T

small_ints = st.integers(min_value=-4, max_value=4)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(small_ints, min_size=c, max_size=c), min_size=r, max_size=r)
        )
    )


class TestRank:
    def test_identity(self):
        assert rank(RatMatrix.identity(3)) == 3

    def test_zero(self):
        assert rank(RatMatrix.zeros(2, 4)) == 0

    def test_sum_of_two_generators(self):
        assert rank(M([[0, 0, 0], [-1, -2, 0], [-1, -1, 0]])) == 2

    @settings(max_examples=60, deadline=None)
    @given(matrices())
    def test_matches_numpy_and_transpose(self, rows):
        A = M(rows)
        r = rank(A)
        assert r == rank(A.T)
        assert r == np.linalg.matrix_rank(np.array(rows, dtype=float))

    @settings(max_examples=60, deadline=None)
    @given(matrices())
    def test_rank_nullity(self, rows):
        A = M(rows)
        basis = kernel_basis(A)
        assert rank(A) + len(basis) == A.ncols
        for v in basis:
            assert not any(A.apply(v))
        if basis:
            assert rank(RatMatrix(basis)) == len(basis)


class TestKernel:
    def test_identity_has_no_kernel(self):
        assert kernel_basis(RatMatrix.identity(4)) == []

    def test_single_row(self):
        (v,) = kernel_basis(M([[1, 1]]))
        assert v[0] == -v[1] != 0

    def test_conservation_space(self):
        basis = kernel_basis(RECEPTOR_GAMMA.T)
        assert len(basis) == 3
        stacked = RatMatrix(list(basis) + [tuple(Fraction(x) for x in r) for r in RECEPTOR_RAYS])
        assert rank(stacked) == 3


class TestRays:
    def test_simple(self):
        assert nonneg_kernel_rays(M([[1, -1]])) == [(1, 1)]

    def test_identity(self):
        assert nonneg_kernel_rays(RatMatrix.identity(3)) == []

    def test_receptor_rays(self):
        assert sorted(nonneg_kernel_rays(RECEPTOR_GAMMA.T)) == sorted(tuple(Fraction(x) for x in r) for r in RECEPTOR_RAYS)

    @settings(max_examples=40, deadline=None)
    @given(matrices(3, 6))
    def test_rays_are_extreme(self, rows):
        A = M(rows)
        rays = nonneg_kernel_rays(A)
        for n, r in enumerate(rays):
            assert all(x >= 0 for x in r) and any(r)
            assert not any(A.apply(r))
            assert all(x.denominator == 1 for x in r)
            others = rays[:n] + rays[n + 1:]
            if others:
                assert not conic_membership(r, others)[0]


class TestInvert:
    def test_identity(self):
        assert invert(RatMatrix.identity(3)) == RatMatrix.identity(3)

    def test_scalar(self):
        assert invert(M([[2]])) == M([[Fraction(1, 2)]])

    def test_transform(self):
        assert RECEPTOR_T @ invert(RECEPTOR_T) == RatMatrix.identity(6)

    def test_singular_reports_rank(self):
        with pytest.raises(SingularMatrixError) as info:
            invert(M([[1, 2], [2, 4]]))
        assert info.value.rank == 1

    def test_random_up_to_8(self):
        rng = np.random.default_rng(7)
        done = 0
        while done < 15:
            n = int(rng.integers(1, 9))
            A = M(rng.integers(-5, 6, (n, n)).tolist())
            if rank(A) < n:
                continue
            assert A @ invert(A) == RatMatrix.identity(n)
            done += 1


class TestMembership:
    def test_zero_target(self):
        ok, lam = conic_membership((0, 0), [(1, 0), (0, 1)])
        assert ok and not any(lam)

    def test_positive_quadrant(self):
        ok, lam = conic_membership((1, 1), [(1, 0), (0, 1)])
        assert ok and lam == (1, 1)

    def test_outside_cone(self):
        assert conic_membership((-1, 0), [(1, 0), (0, 1)]) == (False, None)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.lists(small_ints, min_size=3, max_size=3), min_size=1, max_size=6), st.lists(small_ints, min_size=3, max_size=3))
    def test_certificate_reproduces_target(self, gens, target):
        ok, lam = conic_membership(target, gens)
        if ok:
            assert all(x >= 0 for x in lam)
            combo = [sum(Fraction(l) * g[i] for l, g in zip(lam, gens)) for i in range(3)]
            assert combo == [Fraction(x) for x in target]

    def test_convex_vertex_midpoint_outside(self):
        square = [unit(2, 0), unit(2, 0, -1), unit(2, 1), unit(2, 1, -1)]
        assert convex_membership(unit(2, 1), square)
        assert convex_membership((Fraction(1, 2), Fraction(1, 2)), square)
        assert not convex_membership((2, 0), square)
        assert not convex_membership((1, 1), square)


def test_format_fraction():
    assert format_fraction(Fraction(3)) == "3"
    assert format_fraction(Fraction(-2, 4)) == "-1/2"
    assert RatMatrix.from_strings(M([[1, Fraction(1, 3)]]).to_strings()) == M([[1, Fraction(1, 3)]])
