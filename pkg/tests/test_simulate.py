import csv

import numpy as np
import pytest

from nonosc.netmodel import parse_network
from nonosc.simulate import (
    MassActionParams,
    ParamError,
    ReducedModel,
    StepRejected,
    integrate,
    jacobian_reduced,
    mass_action_rates,
    parse_params,
    random_initial_states,
    reduced_rhs,
    steady_state,
)
from nonosc.stoich import build_reduction
from oracles import FIGURE_RATES, FIGURE_TOTALS, INHIBITOR_JR_ZEROS


@pytest.fixture(scope="module")
def figure_params():
    return MassActionParams(np.array(FIGURE_RATES), np.array(FIGURE_TOTALS))


def test_rates_simple():
    net = parse_network("A -> B")
    assert mass_action_rates(net, MassActionParams([2.0], [1.0]), np.array([3.0, 0.0])) == pytest.approx([6.0])
    net = parse_network("2 A -> B")
    assert mass_action_rates(net, MassActionParams([1.0], [1.0]), np.array([3.0, 0.0])) == pytest.approx([9.0])


def test_rates_figure(receptor, figure_params):
    assert mass_action_rates(receptor, figure_params, np.ones(6)) == pytest.approx(FIGURE_RATES)


def test_decay_reduced():
    net = parse_network("A -> B")
    rs = build_reduction(net, independent=["A"])
    params = MassActionParams([1.0], [5.0])
    assert reduced_rhs(rs, params, np.array([2.0])) == pytest.approx([-2.0])
    params = MassActionParams([3.0], [5.0])
    assert jacobian_reduced(rs, params, np.array([2.0])) == pytest.approx(np.array([[-3.0]]))


def test_jacobian_finite_differences(receptor_rs, figure_params):
    rng = np.random.default_rng(3)
    for xd in random_initial_states(receptor_rs, figure_params, 10, rng):
        J = jacobian_reduced(receptor_rs, figure_params, xd)
        fd = np.empty_like(J)
        for k in range(len(xd)):
            h = 1e-6 * max(1.0, abs(xd[k]))
            e = np.zeros_like(xd)
            e[k] = h
            fd[:, k] = (reduced_rhs(receptor_rs, figure_params, xd + e) - reduced_rhs(receptor_rs, figure_params, xd - e)) / (2 * h)
        assert np.allclose(J, fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(J)))


def test_inhibitor_jacobian_zeros(inhibitor_rs):
    params = MassActionParams(np.arange(1.0, inhibitor_rs.gamma.ncols + 1), np.array([15.0, 15.0, 15.0]))
    rng = np.random.default_rng(5)
    for xd in random_initial_states(inhibitor_rs, params, 5, rng):
        J = jacobian_reduced(inhibitor_rs, params, xd)
        for i in range(3):
            for j in range(3):
                assert (J[i, j] == 0) == ((i, j) in INHIBITOR_JR_ZEROS)


def test_conservation_and_zero_delta(receptor_rs, figure_params):
    rng = np.random.default_rng(7)
    xd0 = random_initial_states(receptor_rs, figure_params, 3, rng)
    traj = integrate(receptor_rs, figure_params, xd0, None, t_end=5.0, dt=0.01, sample_every=10)
    model = ReducedModel(receptor_rs, figure_params)
    laws = np.array([[float(x) for x in r] for r in receptor_rs.basis.rows])
    totals = model.full_state(traj.xd) @ laws.T
    assert np.max(np.abs(totals - figure_params.totals) / figure_params.totals) < 1e-10
    assert np.all(traj.delta == 0)
    assert not traj.clamped


def test_step_halving(receptor_rs, figure_params):
    xd0 = random_initial_states(receptor_rs, figure_params, 1, np.random.default_rng(11))[0]
    delta0 = np.ones(3)

    def end(dt):
        tr = integrate(receptor_rs, figure_params, xd0, delta0, t_end=1.0, dt=dt, sample_every=10**6)
        return np.concatenate([tr.xd[-1], tr.delta[-1]])

    a, b, c = end(0.004), end(0.002), end(0.001)
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    assert 16 * 0.7 <= ratio <= 16 * 1.3


def test_steady_state_residual(receptor_rs, figure_params):
    xs = steady_state(receptor_rs, figure_params)
    assert np.linalg.norm(reduced_rhs(receptor_rs, figure_params, xs)) < 1e-10
    assert np.all(ReducedModel(receptor_rs, figure_params).full_state(xs) > 0)


def test_blowup_rejected():
    net = parse_network("species A B\nA -> B\nB -> A")
    rs = build_reduction(net, independent=["A"])
    params = MassActionParams([1.0, 1.0], [1.0])
    with pytest.raises(StepRejected):
        integrate(rs, params, np.array([1e13]), t_end=1.0, dt=0.1)


def test_bad_step():
    net = parse_network("A -> B")
    rs = build_reduction(net)
    with pytest.raises(ValueError):
        integrate(rs, MassActionParams([1.0], [1.0]), np.array([0.5]), t_end=1.0, dt=0.0)


def test_parse_params():
    p = parse_params("# comment\nk1 = 5\nk2=3.5\ntotal1 = 15 # trailing\n", 2, 1)
    assert list(p.rates) == [5.0, 3.5] and list(p.totals) == [15.0]


@pytest.mark.parametrize(
    "text",
    ["k1 = 5\nk1 = 4\ntotal1 = 1", "k1 = x\ntotal1 = 1", "k1 5\ntotal1 = 1", "k2 = 5\ntotal1 = 1", "k1 = -1\ntotal1 = 1", "k1 = 1\ntotal1 = 0"],
)
def test_parse_params_errors(text):
    with pytest.raises(ParamError):
        parse_params(text, 1, 1)


def test_param_shape_mismatch(receptor_rs):
    with pytest.raises(ParamError):
        ReducedModel(receptor_rs, MassActionParams([1.0], [1.0]))


def test_csv_header(tmp_path, receptor_rs, figure_params, receptor_v):
    xd0 = random_initial_states(receptor_rs, figure_params, 1, np.random.default_rng(2))[0]
    traj = integrate(receptor_rs, figure_params, xd0, np.ones(3), t_end=0.1, dt=0.01, V=receptor_v)
    out = tmp_path / "traj.csv"
    traj.to_csv(out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "x3", "d2_1", "d2_2", "d2_3", "V"]
    assert len(rows) == 12
    assert float(rows[1][-1]) == pytest.approx(2.0)
