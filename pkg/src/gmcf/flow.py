"""Explicit time stepping for the graph flow, with guarded runs.

The update is ``u <- u + dt * v`` (or the classical four-stage scheme) for
the periodic part only; the winding matrix is carried through untouched,
so the homotopy class is preserved bitwise.  Guards run every step and
stop the flow loudly instead of repairing state.  Everything is
deterministic: no randomness enters anywhere, so a rerun from the same
config reproduces every byte of the diagnostics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import diagnostics, geometry, maps
from .grid import GridSpec

if TYPE_CHECKING:
    from .config import ExperimentConfig


class NonFiniteValueError(ArithmeticError):
    """An update produced a NaN or infinity."""


class StopReason(enum.Enum):
    CONVERGED = "converged"
    MAX_TIME_REACHED = "max_time_reached"
    INVARIANT_BREACH = "invariant_breach"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class StopStatus:
    """Why a run ended, and where."""

    reason: StopReason
    step: int
    t: float
    detail: str


@dataclass(frozen=True)
class GuardPolicy:
    """Which invariants the per-step guard enforces.

    ``kind`` is ``"none"``, ``"area_preserving"`` (det df must stay within
    ``preserve_tol`` of one), or ``"area_decreasing"`` (the two-dilation
    must stay below ``1 - margin_floor``).  Finiteness and the projection
    Jacobian floor are checked under every policy.
    """

    kind: str = "none"
    j_floor: float = 1e-3
    preserve_tol: float = 1e-2
    margin_floor: float = 1e-3

    def __post_init__(self) -> None:
        if self.kind not in ("none", "area_preserving", "area_decreasing"):
            raise ValueError(
                f"invalid guard kind {self.kind!r} "
                "(valid: none, area_preserving, area_decreasing)"
            )
        if self.j_floor <= 0:
            raise ValueError("j_floor must be positive")


@dataclass(frozen=True, eq=False)
class FlowState:
    """One instant of the flow: time, step count, current map."""

    t: float
    step: int
    map: maps.MapField
    last_velocity: np.ndarray | None
    dt: float


def initial_state(field_map: maps.MapField) -> FlowState:
    return FlowState(t=0.0, step=0, map=field_map, last_velocity=None, dt=0.0)


def cfl_dt(metric: geometry.MetricField, grid: GridSpec, safety: float = 0.2) -> float:
    """Parabolic step bound ``safety * min h_i^2 / (2 n lambda_max)``.

    ``lambda_max`` is the largest eigenvalue of ``g^{-1}`` over the nodes,
    which never exceeds one, so the step is bounded below by the flat-case
    heat limit times ``safety``.
    """
    if not 0.0 < safety <= 0.5:
        raise ValueError(f"safety must lie in (0, 0.5], got {safety}")
    n = grid.n
    if metric.sigma.shape[0] == n:
        # Smallest eigenvalue of (df)^T df is the last stored singular
        # value squared; for m < n it is exactly zero instead.
        lam = 1.0 / (1.0 + float((metric.sigma[-1] ** 2).min()))
    else:
        lam = 1.0
    hmin = min(grid.spacing)
    return safety * hmin * hmin / (2.0 * n * lam)


def _stage_velocity(state_map: maps.MapField, u: np.ndarray, order: int) -> np.ndarray:
    if not np.isfinite(u).all():
        raise NonFiniteValueError("intermediate stage produced non-finite values")
    stage_map = maps.MapField(
        state_map.grid, state_map.winding, u, state_map.target_kind, state_map.target_period
    )
    jf = geometry.jet(stage_map, order)
    return geometry.velocity(jf, geometry.induced_metric(jf))


def step(
    state: FlowState,
    dt: float,
    scheme: str = "euler",
    order: int = 2,
    velocity: np.ndarray | None = None,
) -> FlowState:
    """Advance one explicit step.

    ``scheme`` is ``"euler"`` or ``"rk4"``.  ``velocity``, if given, must be
    the flow velocity of ``state.map`` and saves one evaluation.  Raises
    :class:`NonFiniteValueError` if the update leaves the finite range.
    """
    if dt <= 0.0 or not np.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if scheme not in ("euler", "rk4"):
        raise ValueError(f"invalid scheme {scheme!r} (valid: euler, rk4)")
    m0 = state.map
    u = m0.periodic_part
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if velocity is None:
            velocity = _stage_velocity(m0, u, order)
        if scheme == "euler":
            u_new = u + dt * velocity
        else:
            k1 = velocity
            k2 = _stage_velocity(m0, u + 0.5 * dt * k1, order)
            k3 = _stage_velocity(m0, u + 0.5 * dt * k2, order)
            k4 = _stage_velocity(m0, u + dt * k3, order)
            u_new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(u_new).all():
        raise NonFiniteValueError(
            f"update produced non-finite values at step {state.step + 1}"
        )
    new_map = maps.MapField(
        m0.grid, m0.winding, u_new, m0.target_kind, m0.target_period
    )
    return FlowState(
        t=state.t + dt, step=state.step + 1, map=new_map, last_velocity=velocity, dt=dt
    )


def _locate(mask_source: np.ndarray, grid: GridSpec) -> str:
    """Human-readable node location of the first flagged entry."""
    idx = np.argwhere(mask_source)
    if idx.size == 0:
        return "unlocated"
    first = tuple(int(v) for v in idx[0])
    node = first[-grid.n:]
    flat = int(np.ravel_multi_index(node, grid.resolution))
    return f"node {flat} (multi-index {node})"


def _nonfinite_status(
    state: FlowState, metric: geometry.MetricField | None, vel: np.ndarray | None
) -> StopStatus | None:
    u = state.map.periodic_part
    if not np.isfinite(u).all():
        where = _locate(~np.isfinite(u), state.map.grid)
        return StopStatus(
            StopReason.NON_FINITE, state.step, state.t,
            f"non-finite map value at {where}",
        )
    if metric is not None and not np.isfinite(metric.sqrt_det).all():
        where = _locate(~np.isfinite(metric.sqrt_det), state.map.grid)
        return StopStatus(
            StopReason.NON_FINITE, state.step, state.t,
            f"non-finite area element at {where}",
        )
    if vel is not None and not np.isfinite(vel).all():
        where = _locate(~np.isfinite(vel), state.map.grid)
        return StopStatus(
            StopReason.NON_FINITE, state.step, state.t,
            f"non-finite velocity at {where}",
        )
    return None


def _policy_status(
    state: FlowState,
    policy: GuardPolicy,
    rec: diagnostics.DiagnosticsRecord,
    jetf: geometry.JetField,
    metric: geometry.MetricField,
) -> StopStatus | None:
    if rec.min_j <= policy.j_floor:
        where = _locate(metric.sqrt_det == metric.sqrt_det.max(), state.map.grid)
        return StopStatus(
            StopReason.INVARIANT_BREACH, state.step, state.t,
            f"projection Jacobian {rec.min_j:.6e} at or below floor "
            f"{policy.j_floor:.6e} at {where}",
        )
    if policy.kind == "area_preserving":
        if rec.min_det2 is None:
            raise ValueError("area_preserving guard requires n = m = 2")
        dev = max(abs(rec.min_det2 - 1.0), abs(rec.max_det2 - 1.0))
        if dev > policy.preserve_tol:
            det2 = geometry.jacobian2(jetf).values
            where = _locate(np.abs(det2 - 1.0) == dev, state.map.grid)
            return StopStatus(
                StopReason.INVARIANT_BREACH, state.step, state.t,
                f"det df deviates from one by {dev:.6e} "
                f"(tolerance {policy.preserve_tol:.6e}) at {where}",
            )
    elif policy.kind == "area_decreasing":
        bound = 1.0 - policy.margin_floor
        if rec.max_two_dilation > bound:
            dil = metric.sigma[0] * metric.sigma[1]
            where = _locate(dil == rec.max_two_dilation, state.map.grid)
            return StopStatus(
                StopReason.INVARIANT_BREACH, state.step, state.t,
                f"two-dilation {rec.max_two_dilation:.6e} above bound "
                f"{bound:.6e} at {where}",
            )
    return None


def guard(
    state: FlowState, policy: GuardPolicy, order: int = 2
) -> StopStatus | None:
    """Check a state against a guard policy; None means all checks passed."""
    bad = _nonfinite_status(state, None, None)
    if bad is not None:
        return bad
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        jf = geometry.jet(state.map, order)
        mf = geometry.induced_metric(jf)
        v = geometry.velocity(jf, mf)
    bad = _nonfinite_status(state, mf, v)
    if bad is not None:
        return bad
    rec = diagnostics.build_record(state.t, state.step, state.dt, jf, mf, v)
    return _policy_status(state, policy, rec, jf, mf)


def run(
    cfg: "ExperimentConfig",
) -> tuple[FlowState, list[diagnostics.DiagnosticsRecord], StopStatus]:
    """Run the flow described by a fully resolved experiment config.

    The loop re-evaluates the metric once per step and shares that
    evaluation between the step bound, the guard, the diagnostics record,
    and the update itself.  Records are kept at step 0, every
    ``sample_every`` steps, and at the terminal step.

    Returns:
        Final state, recorded diagnostics, and the stop status
        (converged, out of time, invariant breach, or non-finite data).
    """
    grid = GridSpec(tuple(cfg.resolution), tuple(cfg.period))
    map0 = maps.build_family_map(
        cfg.family,
        grid,
        dict(cfg.family_params),
        target_kind=cfg.target_kind,
        target_dim=cfg.target_dim,
        target_period=cfg.target_period,
    )
    policy = cfg.guard
    state = initial_state(map0)
    records: list[diagnostics.DiagnosticsRecord] = []
    last_recorded = -1

    def push(rec: diagnostics.DiagnosticsRecord) -> None:
        nonlocal last_recorded
        if rec.step != last_recorded:
            records.append(rec)
            last_recorded = rec.step

    while True:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            jf = geometry.jet(state.map, cfg.stencil_order)
            mf = geometry.induced_metric(jf)
            v = geometry.velocity(jf, mf)
        bad = _nonfinite_status(state, mf, v)
        if bad is not None:
            return state, records, bad
        dt = cfg.dt if cfg.dt_mode == "fixed" else cfl_dt(mf, grid, cfg.safety)
        rec = diagnostics.build_record(state.t, state.step, dt, jf, mf, v)
        breach = _policy_status(state, policy, rec, jf, mf)
        if breach is not None:
            push(rec)
            return state, records, breach
        if state.step % cfg.sample_every == 0:
            push(rec)
        if state.t >= cfg.t_max:
            push(rec)
            return state, records, StopStatus(
                StopReason.MAX_TIME_REACHED, state.step, state.t,
                f"t = {state.t:.6g} reached t_max = {cfg.t_max:.6g}",
            )
        speed = rec.max_speed
        try:
            state = step(state, dt, scheme=cfg.scheme, order=cfg.stencil_order, velocity=v)
        except NonFiniteValueError as exc:
            return state, records, StopStatus(
                StopReason.NON_FINITE, state.step + 1, state.t + dt, str(exc)
            )
        if speed < cfg.tol_converged:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                jf2 = geometry.jet(state.map, cfg.stencil_order)
                mf2 = geometry.induced_metric(jf2)
                v2 = geometry.velocity(jf2, mf2)
            bad = _nonfinite_status(state, mf2, v2)
            if bad is not None:
                return state, records, bad
            push(diagnostics.build_record(state.t, state.step, dt, jf2, mf2, v2))
            return state, records, StopStatus(
                StopReason.CONVERGED, state.step, state.t,
                f"max speed {speed:.6e} below tolerance {cfg.tol_converged:.6e}",
            )
