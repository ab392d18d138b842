"""
Sweep and robustness tests.
"""
import pytest

from core.errors import NumericalConsistencyError, ParameterError
from core.protocol import FLAG_NOT_CERTIFIED, FLAGSHIP_D, FLAGSHIP_R
from core.sweep import (
    NOTE_CHECK_FAILED,
    SweepSpec,
    SweepStatus,
    XPolicy,
    evaluate_point,
    nearest_record,
    run_sweep,
    variances_to_squeezing,
)


class TestSweepSpec:
    """Test grid construction and validation."""

    def test_row_major_order(self):
        grid = SweepSpec(va_range=(1.0, 2.0), vb_range=(1.0, 3.0), va_steps=3, vb_steps=4).grid()
        assert len(grid) == 12
        assert [p[0] for p in grid[:4]] == [1.0] * 4
        assert [p[1] for p in grid[:4]] == pytest.approx([1.0, 5 / 3, 7 / 3, 3.0])
        assert grid[4][0] == pytest.approx(1.5)

    @pytest.mark.parametrize("kwargs", [
        dict(va_range=(2.0, 1.0)),
        dict(vb_range=(0.0, 4.0)),
        dict(va_steps=1),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ParameterError):
            SweepSpec(**kwargs)

    def test_negative_policy(self):
        with pytest.raises(ParameterError):
            XPolicy.fixed(-1.0)

    def test_default_policy_margin(self):
        assert SweepSpec().x_policy == XPolicy.threshold_margin(1e-3)

    def test_variances_to_squeezing(self):
        d, r = variances_to_squeezing(1.5, 2.0)
        assert d == pytest.approx(FLAGSHIP_D, rel=1e-14)
        assert r == pytest.approx(FLAGSHIP_R, rel=1e-14)


class TestEvaluatePoint:
    """Test per-point classification."""

    def test_flagship_fixed_x(self):
        record = evaluate_point(1.5, 2.0, XPolicy.fixed(1.041))
        assert record.status == SweepStatus.OK
        assert record.nu == pytest.approx(0.9571, abs=5e-4)
        assert record.x_used == 1.041

    def test_flagship_threshold_margin(self):
        record = evaluate_point(1.5, 2.0, XPolicy.threshold_margin(1e-3))
        assert record.status == SweepStatus.OK
        assert record.x_used == pytest.approx(1.001 * record.x_th)
        assert record.nu == pytest.approx(0.9571, abs=0.01)

    def test_ancilla_entangled_below_threshold(self):
        record = evaluate_point(1.5, 2.0, XPolicy.fixed(0.5))
        assert record.status == SweepStatus.ENTANGLED_ANCILLA
        assert record.sigma_step2 < 0

    def test_uncertified_preparation(self):
        record = evaluate_point(1.5, 2.0, XPolicy.fixed(0.1))
        assert record.status == SweepStatus.ENTANGLED_ANCILLA
        assert record.note == FLAG_NOT_CERTIFIED
        assert record.nu is not None

    @pytest.mark.parametrize("va,vb", [(2.0, 1.5), (2.0, 2.0), (0.8, 2.0)])
    def test_invalid_variances(self, va, vb):
        record = evaluate_point(va, vb, XPolicy.threshold_margin())
        assert record.status == SweepStatus.INVALID_POINT
        assert record.nu is None

    @pytest.mark.parametrize("va,vb", [(1.825, 2.4625), (2.075, 3.625)])
    def test_large_threshold_points(self, va, vb):
        """Grid points with x_th in the hundreds still produce full records."""
        record = evaluate_point(va, vb, XPolicy.threshold_margin(1e-3))
        assert record.x_th > 100
        assert record.note == ""
        assert record.nu is not None
        assert record.status in (SweepStatus.OK, SweepStatus.ENTANGLED_ANCILLA, SweepStatus.NOT_ENTANGLED)

    def test_failed_check_keeps_point(self, monkeypatch):
        def failing(gamma1):
            raise NumericalConsistencyError("pairing failed")

        monkeypatch.setattr("core.sweep.step_statistics", failing)
        record = evaluate_point(1.5, 2.0, XPolicy.fixed(1.041))
        assert record.status == SweepStatus.NO_THRESHOLD
        assert record.note.startswith(NOTE_CHECK_FAILED)
        assert record.x_used == 1.041
        assert record.nu is None


class TestRunSweep:
    """Test full sweeps."""

    def test_independent_of_worker_count(self):
        spec = SweepSpec(va_steps=11, vb_steps=13)
        assert run_sweep(spec, workers=1) == run_sweep(spec, workers=4)

    def test_nearest_record(self):
        records = run_sweep(SweepSpec(va_steps=5, vb_steps=7), workers=2)
        nearest = nearest_record(records, 1.5, 2.0)
        assert (nearest.vA, nearest.vB) == (1.5, 2.0)

    @pytest.mark.slow
    def test_default_grid_region(self):
        records = run_sweep(SweepSpec())
        assert len(records) == 81 * 81

        nearest = nearest_record(records, 1.5, 2.0)
        assert nearest.vA == pytest.approx(1.5)
        assert nearest.vB == pytest.approx(2.0125)
        assert nearest.status == SweepStatus.OK
        assert nearest.nu == pytest.approx(0.9571, abs=0.01)

        statuses = {record.status for record in records}
        assert SweepStatus.OK in statuses
        assert statuses - {SweepStatus.OK}
        assert not [record for record in records if record.note.startswith(NOTE_CHECK_FAILED)]
