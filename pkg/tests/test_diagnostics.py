"""Tests for diagnostics records, convergence reports, and order estimates."""

import math

import numpy as np
import pytest

from gmcf import (
    DiagnosticsRecord,
    GridSpec,
    MapField,
    convergence_report,
    induced_metric,
    initial_state,
    jet,
    make_identity,
    make_shear_composition,
    observed_order,
    record,
    velocity,
)
from gmcf.diagnostics import build_record


def _state(mf):
    return initial_state(mf)


class TestRecordValues:
    def test_identity_map_diagnostics(self):
        grid = GridSpec((32, 32))
        rec = record(_state(make_identity(grid)))
        assert rec.t == 0.0 and rec.step == 0
        # g = 2I everywhere: area = sqrt(4) * (2 pi)^2, J = 1/2.
        np.testing.assert_allclose(rec.area, 8.0 * np.pi**2, rtol=1e-13)
        np.testing.assert_allclose(rec.min_j, 0.5, atol=1e-14)
        assert rec.max_speed <= 1e-12
        np.testing.assert_allclose(rec.min_det2, 1.0, atol=1e-12)
        np.testing.assert_allclose(rec.max_det2, 1.0, atol=1e-12)
        np.testing.assert_allclose(rec.max_two_dilation, 1.0, atol=1e-12)
        np.testing.assert_allclose(rec.max_grad, 1.0, atol=1e-12)

    def test_constant_map_diagnostics(self):
        grid = GridSpec((16, 16))
        mf = MapField(
            grid,
            np.zeros((2, 2)),
            np.zeros((2, 16, 16)),
            "torus",
            (2.0 * np.pi, 2.0 * np.pi),
        )
        rec = record(_state(mf))
        np.testing.assert_allclose(rec.area, 4.0 * np.pi**2, rtol=1e-14)
        assert rec.min_j == 1.0
        assert rec.max_speed == 0.0
        assert rec.min_det2 == 0.0 and rec.max_det2 == 0.0
        assert rec.max_two_dilation == 0.0
        assert rec.max_grad == 0.0

    def test_shear_det_near_one_at_start(self):
        grid = GridSpec((64, 64))
        rec = record(_state(make_shear_composition(grid, 0.4, 0.4)))
        # det df = 1 exactly for the map; discretization leaves O(h^2) residue.
        assert abs(rec.min_det2 - 1.0) <= 5e-4
        assert abs(rec.max_det2 - 1.0) <= 5e-4

    def test_det_absent_unless_two_by_two(self):
        grid = GridSpec((16, 16))
        u = 0.1 * np.sin(grid.mesh()[0])[None]
        mf = MapField(grid, np.zeros((1, 2)), u, "euclidean", None)
        rec = record(_state(mf))
        assert rec.min_det2 is None and rec.max_det2 is None
        assert rec.max_two_dilation == 0.0

    def test_build_record_matches_record(self):
        grid = GridSpec((16, 16))
        st = _state(make_shear_composition(grid, 0.3, 0.2))
        jf = jet(st.map, 2)
        mf = induced_metric(jf)
        v = velocity(jf, mf)
        assert build_record(st.t, st.step, st.dt, jf, mf, v) == record(st)


class TestRecordValidation:
    def _kwargs(self, **overrides):
        base = dict(
            t=0.0, step=0, dt=1e-3, area=1.0, min_j=0.5, max_speed=1e-6,
            min_det2=None, max_det2=None, max_two_dilation=0.5, max_grad=0.5,
        )
        base.update(overrides)
        return base

    def test_accepts_valid_record(self):
        DiagnosticsRecord(**self._kwargs())

    @pytest.mark.parametrize("field", ["t", "area", "max_speed", "max_grad"])
    def test_rejects_non_finite_scalars(self, field):
        with pytest.raises(ValueError, match="non-finite"):
            DiagnosticsRecord(**self._kwargs(**{field: math.nan}))

    def test_rejects_non_finite_det(self):
        with pytest.raises(ValueError, match="non-finite"):
            DiagnosticsRecord(**self._kwargs(min_det2=math.inf, max_det2=1.0))

    @pytest.mark.parametrize("bad_j", [0.0, -0.5, 1.5])
    def test_rejects_out_of_range_jacobian(self, bad_j):
        with pytest.raises(ValueError, match="outside"):
            DiagnosticsRecord(**self._kwargs(min_j=bad_j))

    def test_rejects_half_set_det_extremes(self):
        with pytest.raises(ValueError, match="both"):
            DiagnosticsRecord(**self._kwargs(min_det2=1.0, max_det2=None))

    @pytest.mark.parametrize(
        "overrides",
        [dict(max_two_dilation=-1e-6), dict(dt=-1e-3), dict(step=-1)],
    )
    def test_rejects_basic_bound_violations(self, overrides):
        with pytest.raises(ValueError, match="basic bounds"):
            DiagnosticsRecord(**self._kwargs(**overrides))


def _rec(t, step, area, min_j, det2=None, dilation=0.0):
    return DiagnosticsRecord(
        t=t, step=step, dt=1e-3, area=area, min_j=min_j, max_speed=1e-9,
        min_det2=det2, max_det2=det2, max_two_dilation=dilation, max_grad=0.5,
    )


class TestConvergenceReport:
    def test_flags_area_increase_above_tolerance(self):
        recs = [_rec(0.0, 0, 1.0, 0.5), _rec(1e-3, 1, 1.0 + 2e-10, 0.5)]
        rep = convergence_report(recs)
        assert rep.area_violations == 1
        np.testing.assert_allclose(rep.worst_area_increase, 2e-10, rtol=1e-6)

    def test_tolerated_area_increase_is_recorded_but_not_flagged(self):
        recs = [_rec(0.0, 0, 1.0, 0.5), _rec(1e-3, 1, 1.0 + 5e-11, 0.5)]
        rep = convergence_report(recs)
        assert rep.area_violations == 0
        assert rep.worst_area_increase > 0.0

    def test_decreasing_area_is_clean(self):
        recs = [_rec(1e-3 * k, k, 2.0 - 0.1 * k, 0.5) for k in range(5)]
        rep = convergence_report(recs)
        assert rep.area_violations == 0
        assert rep.worst_area_increase == 0.0

    def test_flags_min_j_drop(self):
        recs = [_rec(0.0, 0, 1.0, 0.5), _rec(1e-3, 1, 1.0, 0.5 - 2e-8)]
        rep = convergence_report(recs)
        assert rep.min_j_violations == 1
        np.testing.assert_allclose(rep.worst_min_j_drop, 2e-8, rtol=1e-6)

    def test_rising_min_j_is_clean(self):
        recs = [_rec(1e-3 * k, k, 1.0, 0.5 + 0.05 * k) for k in range(5)]
        rep = convergence_report(recs)
        assert rep.min_j_violations == 0
        assert rep.worst_min_j_drop == 0.0

    def test_det_corridor_held_and_broken(self):
        inside = [_rec(0.0, 0, 1.0, 0.5, det2=0.999), _rec(1e-3, 1, 1.0, 0.5, det2=1.004)]
        assert convergence_report(inside).det_corridor_held is True
        outside = inside + [_rec(2e-3, 2, 1.0, 0.5, det2=1.006)]
        assert convergence_report(outside).det_corridor_held is False

    def test_det_corridor_none_without_det(self):
        recs = [_rec(0.0, 0, 1.0, 0.5), _rec(1e-3, 1, 1.0, 0.5)]
        assert convergence_report(recs).det_corridor_held is None

    def test_dilation_bound_held_and_broken(self):
        ok = [_rec(0.0, 0, 1.0, 0.5, dilation=0.8), _rec(1e-3, 1, 1.0, 0.5, dilation=0.9)]
        assert convergence_report(ok).dilation_bounded is True
        bad = ok + [_rec(2e-3, 2, 1.0, 0.5, dilation=1.0)]
        assert convergence_report(bad).dilation_bounded is False

    def test_dilation_none_when_all_zero(self):
        recs = [_rec(0.0, 0, 1.0, 0.5), _rec(1e-3, 1, 1.0, 0.5)]
        assert convergence_report(recs).dilation_bounded is None

    def test_single_record(self):
        rec = _rec(0.0, 0, 1.0, 0.5)
        rep = convergence_report([rec])
        assert rep.n_records == 1
        assert rep.area_violations == 0 and rep.min_j_violations == 0
        assert rep.final == rec

    def test_empty_records_raise(self):
        with pytest.raises(ValueError, match="empty"):
            convergence_report([])


class TestObservedOrder:
    def test_second_order_ladder(self):
        est = observed_order(lambda N: 64.0 / N**2, (32, 64, 128))
        assert not est.exact
        np.testing.assert_allclose(est.pairwise, (2.0, 2.0), rtol=1e-12)
        np.testing.assert_allclose(est.mean, 2.0, rtol=1e-12)
        s = str(est)
        assert "orders" in s and "mean 2.000" in s

    def test_all_roundoff_reports_exact(self):
        est = observed_order(lambda N: 1e-15, (8, 16, 32))
        assert est.exact and est.mean is None
        assert "exact" in str(est)

    def test_mixed_roundoff_is_degenerate(self):
        errs = {32: 1e-3, 64: 5e-14, 128: 1e-5}
        est = observed_order(lambda N: errs[N], (32, 64, 128))
        assert not est.exact and est.mean is None
        assert "degenerate" in str(est)

    def test_requires_three_resolutions(self):
        with pytest.raises(ValueError, match="three"):
            observed_order(lambda N: 1.0 / N, (32, 64))

    def test_requires_doubling(self):
        with pytest.raises(ValueError, match="double"):
            observed_order(lambda N: 1.0 / N, (32, 48, 96))

    def test_rejects_negative_errors(self):
        with pytest.raises(ValueError, match="non-negative"):
            observed_order(lambda N: -1.0, (32, 64, 128))
