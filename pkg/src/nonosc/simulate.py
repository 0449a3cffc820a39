"""Mass-action simulation of the reduced system and its second variational equation.

The state integrated is the cascade ``(x_d, delta)``: ``x_d`` follows
``Gamma_r R(x)`` with ``x = T^{-1} [totals; x_d]`` and ``delta`` follows
``J_r(x)^(2) delta``.  Everything here is floating point and batched over a
leading axis so many trajectories advance together.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .compound import additive_compound
from .lyapunov import PWLFunction
from .stoich import ReducedSystem, rank_one_matrices

BLOWUP = 1e12

_PARAM = re.compile(r"\s*(k|total)(\d+)\s*=\s*(\S+)\s*\Z")


class ParamError(ValueError):
    pass


class StepRejected(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"state magnitude exceeded {BLOWUP:g} at t = {t:g}")
        self.t = t


@dataclass(frozen=True)
class MassActionParams:
    rates: np.ndarray
    totals: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        totals = np.asarray(self.totals, dtype=float)
        if np.any(rates <= 0):
            raise ParamError("rate constants must be positive")
        if np.any(totals <= 0):
            raise ParamError("totals must be positive")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "totals", totals)


def parse_params(text: str, n_reactions: int | None = None, n_totals: int | None = None) -> MassActionParams:
    """Read ``k<j> = value`` and ``total<i> = value`` lines (1-based, ``#`` comments)."""
    found = {"k": {}, "total": {}}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        m = _PARAM.match(body)
        if not m:
            raise ParamError(f"line {lineno}: expected 'k<j> = value' or 'total<i> = value'")
        kind, idx, raw = m.group(1), int(m.group(2)), m.group(3)
        try:
            value = float(raw)
        except ValueError:
            raise ParamError(f"line {lineno}: bad number {raw!r}") from None
        if idx < 1 or idx in found[kind]:
            raise ParamError(f"line {lineno}: bad or repeated index {kind}{idx}")
        found[kind][idx] = value

    def dense(kind: str, size: int | None) -> list[float]:
        got = found[kind]
        size = max(got, default=0) if size is None else size
        missing = [i for i in range(1, size + 1) if i not in got]
        extra = [i for i in got if i > size]
        if missing or extra:
            raise ParamError(f"{kind} indices must cover 1..{size} exactly")
        return [got[i] for i in range(1, size + 1)]

    return MassActionParams(np.array(dense("k", n_reactions)), np.array(dense("total", n_totals)))


def read_params(path, n_reactions: int | None = None, n_totals: int | None = None) -> MassActionParams:
    with open(path, encoding="utf-8") as fh:
        return parse_params(fh.read(), n_reactions, n_totals)


class ReducedModel:
    """Float arrays derived once from a :class:`ReducedSystem`."""

    def __init__(self, rs: ReducedSystem, params: MassActionParams):
        if params.totals.shape != (rs.c,):
            raise ParamError(f"expected {rs.c} totals, got {params.totals.shape[0]}")
        if params.rates.shape != (rs.gamma.ncols,):
            raise ParamError(f"expected {rs.gamma.ncols} rate constants, got {params.rates.shape[0]}")
        self.rs = rs
        self.params = params
        self.dim = rs.dim
        T_inv = rs.T_inv.to_numpy()
        self.offset = T_inv[:, : rs.c] @ params.totals
        self.lift = T_inv[:, rs.c:]
        self.alpha = rs.alpha.to_numpy()
        self.gamma_r = rs.gamma_r.to_numpy()
        self.pairs = np.array(rs.pairs, dtype=int).reshape(-1, 2)
        mats = rank_one_matrices(rs)
        self.A = np.stack([A.to_numpy() for A in mats]) if mats else np.zeros((0, self.dim, self.dim))
        if self.dim >= 2:
            self.A2 = np.stack([additive_compound(A, 2).matrix.to_numpy() for A in mats])
        else:
            self.A2 = np.zeros((len(mats), 0, 0))

    def full_state(self, xd: np.ndarray) -> np.ndarray:
        return self.offset + np.asarray(xd, dtype=float) @ self.lift.T

    def rates(self, x: np.ndarray) -> np.ndarray:
        return mass_action(self.params.rates, self.alpha, x)

    def partials(self, x: np.ndarray) -> np.ndarray:
        """``rho_l = dR_j / dx_i`` for each pair ``(j, i)``."""
        j, i = self.pairs[:, 0], self.pairs[:, 1]
        order = self.alpha[i, j]
        x = np.asarray(x, dtype=float)
        xi = x[..., i]
        # drop species i from the monomial, then differentiate its factor
        alpha_cols = self.alpha[:, j].T.copy()
        alpha_cols[np.arange(len(i)), i] = 0.0
        others = np.prod(x[..., None, :] ** alpha_cols, axis=-1)
        return self.params.rates[j] * order * xi ** (order - 1) * others

    def rhs(self, xd: np.ndarray) -> tuple[np.ndarray, bool]:
        x = self.full_state(xd)
        clamped = bool(np.any(x < 0))
        x = np.maximum(x, 0.0)
        return self.rates(x) @ self.gamma_r.T, clamped

    def jacobian(self, xd: np.ndarray) -> np.ndarray:
        x = np.maximum(self.full_state(xd), 0.0)
        return np.einsum("...s,sij->...ij", self.partials(x), self.A)

    def cascade(self, xd: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        x = self.full_state(xd)
        clamped = bool(np.any(x < 0))
        x = np.maximum(x, 0.0)
        dx = self.rates(x) @ self.gamma_r.T
        rho = self.partials(x)
        J2 = np.einsum("...s,sij->...ij", rho, self.A2)
        dd = np.einsum("...ij,...j->...i", J2, delta)
        return dx, dd, clamped


def mass_action(rates: np.ndarray, alpha: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``R_j = k_j prod_i x_i^alpha_ij`` with ``0^0 = 1``; batched over leading axes."""
    x = np.asarray(x, dtype=float)
    return rates * np.prod(x[..., :, None] ** alpha, axis=-2)


def mass_action_rates(net, params: MassActionParams, x: np.ndarray) -> np.ndarray:
    from .stoich import reactant_matrix

    return mass_action(params.rates, reactant_matrix(net).to_numpy(), x)


def reduced_rhs(rs: ReducedSystem, params: MassActionParams, xd: np.ndarray) -> np.ndarray:
    return ReducedModel(rs, params).rhs(xd)[0]


def jacobian_reduced(rs: ReducedSystem, params: MassActionParams, xd: np.ndarray) -> np.ndarray:
    """``J_r = sum_l rho_l(x) A_l`` from the analytic mass-action partials."""
    return ReducedModel(rs, params).jacobian(xd)


@dataclass
class Trajectory:
    t: np.ndarray
    xd: np.ndarray
    delta: np.ndarray
    V: np.ndarray | None = None
    clamped: bool = False
    notes: list[str] = field(default_factory=list)

    def to_csv(self, path, batch: int = 0) -> None:
        xd = self.xd if self.xd.ndim == 2 else self.xd[:, batch]
        delta = self.delta if self.delta.ndim == 2 else self.delta[:, batch]
        header = ["t"] + [f"x{i + 1}" for i in range(xd.shape[1])] + [f"d2_{i + 1}" for i in range(delta.shape[1])]
        V = None
        if self.V is not None:
            header.append("V")
            V = self.V if self.V.ndim == 1 else self.V[:, batch]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(header)
            for n, t in enumerate(self.t):
                row = [repr(float(t))] + [repr(float(v)) for v in xd[n]] + [repr(float(v)) for v in delta[n]]
                if V is not None:
                    row.append(repr(float(V[n])))
                out.writerow(row)


def integrate(
    rs: ReducedSystem,
    params: MassActionParams,
    xd0: np.ndarray,
    delta0: np.ndarray | None = None,
    t_end: float = 50.0,
    dt: float = 1e-3,
    V: PWLFunction | None = None,
    sample_every: int = 1,
) -> Trajectory:
    """Fixed-step RK4 on the ``(x_d, delta)`` cascade.

    ``xd0`` may carry a leading batch axis; ``delta0`` defaults to zero.
    Samples are kept every ``sample_every`` steps, always including both ends.
    """
    if dt <= 0 or t_end < dt:
        raise ValueError("need dt > 0 and t_end >= dt")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    model = ReducedModel(rs, params)
    xd = np.array(xd0, dtype=float)
    N = model.A2.shape[1]
    delta = np.zeros(xd.shape[:-1] + (N,)) if delta0 is None else np.array(delta0, dtype=float)
    if xd.shape[-1] != model.dim or delta.shape[-1] != N or xd.shape[:-1] != delta.shape[:-1]:
        raise ValueError("initial state shapes do not match the reduced system")
    steps = int(round(t_end / dt))

    ts, xs, ds = [0.0], [xd.copy()], [delta.copy()]
    clamped = False
    for n in range(1, steps + 1):
        k1x, k1d, c1 = model.cascade(xd, delta)
        k2x, k2d, c2 = model.cascade(xd + 0.5 * dt * k1x, delta + 0.5 * dt * k1d)
        k3x, k3d, c3 = model.cascade(xd + 0.5 * dt * k2x, delta + 0.5 * dt * k2d)
        k4x, k4d, c4 = model.cascade(xd + dt * k3x, delta + dt * k3d)
        xd = xd + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        delta = delta + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
        clamped = clamped or c1 or c2 or c3 or c4
        if not (np.all(np.isfinite(xd)) and np.all(np.isfinite(delta))) or max(
            np.max(np.abs(xd), initial=0.0), np.max(np.abs(delta), initial=0.0)
        ) > BLOWUP:
            raise StepRejected(n * dt)
        if n % sample_every == 0 or n == steps:
            ts.append(n * dt)
            xs.append(xd.copy())
            ds.append(delta.copy())

    traj = Trajectory(np.array(ts), np.array(xs), np.array(ds), clamped=clamped)
    if V is not None and N:
        traj.V = V(traj.delta)
    if clamped:
        traj.notes.append("negative concentrations were clamped to zero")
    return traj


def feasible_point(rs: ReducedSystem, params: MassActionParams) -> np.ndarray:
    """A reduced state whose full reconstruction is as far from the boundary as possible."""
    model = ReducedModel(rs, params)
    n, d = model.lift.shape
    # maximize s subject to offset + lift y >= s
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-model.lift, np.ones((n, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=model.offset, bounds=[(None, None)] * d + [(None, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise ValueError("the stoichiometric class has empty positive interior")
    return res.x[:d]


def steady_state(
    rs: ReducedSystem,
    params: MassActionParams,
    xd0: np.ndarray | None = None,
    t_end: float = 200.0,
    dt: float = 1e-2,
    tol: float = 1e-12,
    max_newton: int = 50,
) -> np.ndarray:
    """Long integration followed by Newton polish with the analytic Jacobian."""
    model = ReducedModel(rs, params)
    if xd0 is None:
        xd0 = feasible_point(rs, params)
    xd = integrate(rs, params, xd0, t_end=t_end, dt=dt, sample_every=max(1, int(t_end / dt))).xd[-1]
    for _ in range(max_newton):
        f, _ = model.rhs(xd)
        if np.linalg.norm(f) < tol:
            break
        xd = xd - np.linalg.solve(model.jacobian(xd), f)
    return xd


def random_initial_states(
    rs: ReducedSystem, params: MassActionParams, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Positive points of the stoichiometric class: random mixtures of an interior point
    and the vertices reached along random directions."""
    model = ReducedModel(rs, params)
    center = feasible_point(rs, params)
    out = []
    while len(out) < count:
        direction = rng.normal(size=model.dim)
        # largest step keeping every concentration positive
        x0 = model.full_state(center)
        slope = model.lift @ direction
        neg = slope < 0
        reach = np.min(-x0[neg] / slope[neg]) if np.any(neg) else 1.0
        out.append(center + rng.uniform(0.05, 0.95) * reach * direction)
    return np.array(out)

