"""Flow diagnostics: per-step records, convergence reports, observed orders."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from . import geometry

if TYPE_CHECKING:
    from .flow import FlowState


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar diagnostics of one flow state.

    ``min_det2`` and ``max_det2`` are the extremes of ``det df`` and exist
    only for surface-to-surface maps (n = m = 2); otherwise they are None.
    """

    t: float
    step: int
    dt: float
    area: float
    min_j: float
    max_speed: float
    min_det2: float | None
    max_det2: float | None
    max_two_dilation: float
    max_grad: float

    def __post_init__(self) -> None:
        scalars = [self.t, self.dt, self.area, self.min_j, self.max_speed,
                   self.max_two_dilation, self.max_grad]
        if not all(math.isfinite(v) for v in scalars):
            raise ValueError("diagnostics record contains non-finite values")
        if (self.min_det2 is None) != (self.max_det2 is None):
            raise ValueError("det2 extremes must both be set or both be None")
        if self.min_det2 is not None and not (
            math.isfinite(self.min_det2) and math.isfinite(self.max_det2)
        ):
            raise ValueError("diagnostics record contains non-finite values")
        if not 0.0 < self.min_j <= 1.0 + 1e-9:
            raise ValueError(f"projection Jacobian {self.min_j} outside (0, 1]")
        if self.max_two_dilation < -1e-12 or self.dt < 0.0 or self.step < 0:
            raise ValueError("diagnostics record violates basic bounds")


def build_record(
    t: float,
    step: int,
    dt: float,
    jetf: geometry.JetField,
    metric: geometry.MetricField,
    vel: np.ndarray,
) -> DiagnosticsRecord:
    """Assemble a record from one already-computed metric evaluation."""
    grid = metric.grid
    if jetf.grid.n == 2 and jetf.m == 2:
        det2 = geometry.jacobian2(jetf).values
        min_det2, max_det2 = float(det2.min()), float(det2.max())
    else:
        min_det2 = max_det2 = None
    sigma = metric.sigma
    if sigma.shape[0] >= 2:
        max_dil = float((sigma[0] * sigma[1]).max())
    else:
        max_dil = 0.0
    return DiagnosticsRecord(
        t=float(t),
        step=int(step),
        dt=float(dt),
        area=float(metric.sqrt_det.sum() * grid.cell_volume),
        min_j=float(1.0 / metric.sqrt_det.max()),
        max_speed=float(np.abs(vel).max()),
        min_det2=min_det2,
        max_det2=max_det2,
        max_two_dilation=max_dil,
        max_grad=float(sigma[0].max()),
    )


def record(state: "FlowState", order: int = 2) -> DiagnosticsRecord:
    """Evaluate a flow state once and collect all diagnostics from it."""
    jf = geometry.jet(state.map, order)
    mf = geometry.induced_metric(jf)
    v = geometry.velocity(jf, mf)
    return build_record(state.t, state.step, state.dt, jf, mf, v)


@dataclass(frozen=True)
class ConvergenceReport:
    """Monotonicity audit and final snapshot of a run's records."""

    n_records: int
    area_violations: int
    worst_area_increase: float
    min_j_violations: int
    worst_min_j_drop: float
    det_corridor_held: bool | None
    dilation_bounded: bool | None
    final: DiagnosticsRecord


def convergence_report(
    records: Sequence[DiagnosticsRecord],
    area_tol: float = 1e-10,
    min_j_tol: float = 1e-8,
    det_corridor: float = 5e-3,
) -> ConvergenceReport:
    """Audit recorded diagnostics for invariant drift.

    Counts recorded steps where the area increased by more than
    ``area_tol`` or the minimum projection Jacobian dropped by more than
    ``min_j_tol``, and checks the det-df corridor ``|det - 1| <= det_corridor``
    and the two-dilation bound ``< 1`` where those quantities exist.
    """
    if not records:
        raise ValueError("cannot report on an empty record list")
    area_viol = 0
    worst_inc = 0.0
    minj_viol = 0
    worst_drop = 0.0
    for prev, cur in zip(records, records[1:]):
        inc = cur.area - prev.area
        if inc > area_tol:
            area_viol += 1
        worst_inc = max(worst_inc, inc)
        drop = prev.min_j - cur.min_j
        if drop > min_j_tol:
            minj_viol += 1
        worst_drop = max(worst_drop, drop)
    if records[0].min_det2 is not None:
        det_held = all(
            abs(r.min_det2 - 1.0) <= det_corridor and abs(r.max_det2 - 1.0) <= det_corridor
            for r in records
        )
    else:
        det_held = None
    if any(r.max_two_dilation > 0.0 for r in records):
        dil_bounded = all(r.max_two_dilation < 1.0 for r in records)
    else:
        dil_bounded = None
    return ConvergenceReport(
        n_records=len(records),
        area_violations=area_viol,
        worst_area_increase=worst_inc,
        min_j_violations=minj_viol,
        worst_min_j_drop=worst_drop,
        det_corridor_held=det_held,
        dilation_bounded=dil_bounded,
        final=records[-1],
    )


@dataclass(frozen=True)
class OrderEstimate:
    """Observed convergence order over a doubling resolution ladder."""

    resolutions: tuple[int, ...]
    errors: tuple[float, ...]
    pairwise: tuple[float, ...]
    mean: float | None
    exact: bool

    def __str__(self) -> str:
        if self.exact:
            return f"exact (max error {max(self.errors):.2e})"
        if self.mean is None:
            return "degenerate (some errors at roundoff level)"
        pairs = ", ".join(f"{p:.3f}" for p in self.pairwise)
        return f"orders {pairs} (mean {self.mean:.3f})"


def observed_order(
    evaluator: Callable[[int], float],
    resolutions: Sequence[int],
    zero_floor: float = 1e-13,
) -> OrderEstimate:
    """Richardson-style observed order from errors on doubling resolutions.

    ``evaluator(N)`` returns the error at resolution ``N``.  Errors below
    ``zero_floor`` at every level are reported as exact rather than as an
    order; a mix of roundoff-level and genuine errors yields a degenerate
    estimate with ``mean = None``.
    """
    res = tuple(int(N) for N in resolutions)
    if len(res) < 3:
        raise ValueError("need at least three resolutions")
    for a, b in zip(res, res[1:]):
        if b != 2 * a:
            raise ValueError(f"resolutions must double, got {a} -> {b}")
    errors = tuple(float(evaluator(N)) for N in res)
    if any(e < 0 for e in errors):
        raise ValueError("errors must be non-negative")
    if max(errors) <= zero_floor:
        return OrderEstimate(res, errors, (), None, True)
    pairwise = []
    usable = True
    for e0, e1 in zip(errors, errors[1:]):
        if e0 <= zero_floor or e1 <= zero_floor:
            usable = False
            continue
        pairwise.append(math.log2(e0 / e1))
    mean = sum(pairwise) / len(pairwise) if pairwise and usable else None
    return OrderEstimate(res, errors, tuple(pairwise), mean, False)
