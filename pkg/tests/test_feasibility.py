import numpy as np
import pytest

from hptopt.feasibility import (
    PENALTY_FLOOR,
    CalibrationError,
    CalibrationGrid,
    FeasibleRegion,
    calibrate_region,
    flag_non_physical,
    is_feasible,
    make_penalized_objective,
    penalized_objective,
)
from hptopt.hpto import DESIGN_BOUNDS, DesignVector
from hptopt.simulate import SERIES_NAMES, SimulationResult


def healthy_result(mean_elec=100e3, n=201, duration=400.0, **overrides):
    """A synthetic run that passes every physicality check."""
    time = np.linspace(0.0, duration, n)
    series = {name: np.zeros(n) for name in SERIES_NAMES}
    series["p_top"] = np.full(n, 8.0e6)
    series["p_bottom"] = np.full(n, 4.0e6)
    series["p_hpa"] = np.full(n, 8.0e6)
    series["p_lpa"] = np.full(n, 4.0e6)
    series["p_abs"] = np.full(n, 2.0 * mean_elec)
    series["p_mech"] = np.full(n, 1.5 * mean_elec)
    series["p_elec"] = np.full(n, float(mean_elec))
    for name, values in overrides.items():
        series[name] = np.asarray(values, dtype=float)
    return SimulationResult(time=time, series=series)


def diverged_result():
    r = healthy_result(n=51, duration=50.0)
    r.non_physical = True
    r.reason = "hpa-accumulator-full"
    return r


def region_with_knots():
    return FeasibleRegion(knots=((0.05, 1.0), (0.15, 3.0)))


class TestFeasibleRegion:
    def test_threshold_interpolates(self):
        region = region_with_knots()
        assert region.threshold(0.10) == pytest.approx(2.0, rel=1e-12)

    def test_threshold_clamps_at_end_knots(self):
        region = region_with_knots()
        assert region.threshold(0.01) == 1.0
        assert region.threshold(0.44) == 3.0

    def test_no_knots_means_box_floor(self):
        assert FeasibleRegion().threshold(0.1) == DESIGN_BOUNDS[1, 0]

    def test_knots_must_increase(self):
        with pytest.raises(ValueError):
            FeasibleRegion(knots=((0.1, 1.0), (0.1, 2.0)))

    def test_knot_volumes_inside_box(self):
        with pytest.raises(ValueError):
            FeasibleRegion(knots=((0.1, 11.0),))

    def test_save_load_round_trip(self, tmp_path):
        region = region_with_knots()
        path = tmp_path / "region.json"
        region.save(path)
        loaded = FeasibleRegion.load(path)
        assert loaded.knots == region.knots
        assert np.array_equal(loaded.bounds, region.bounds)
        # byte-identical on re-save
        region.save(tmp_path / "again.json")
        assert (tmp_path / "region.json").read_bytes() == (tmp_path / "again.json").read_bytes()


class TestIsFeasible:
    def test_box_center_with_max_hpa(self):
        x = DesignVector(0.1125, 10.0, 4.25, 6.55e6)
        assert is_feasible(x, region_with_knots())

    def test_below_box_volume(self):
        x = DesignVector(0.1125, 0.4, 4.25, 6.55e6)
        assert not is_feasible(x, region_with_knots())

    def test_threshold_boundary_is_closed(self):
        region = region_with_knots()
        at = DesignVector(0.15, 3.0, 4.0, 6.0e6)
        just_below = DesignVector(0.15, 3.0 - 1e-9, 4.0, 6.0e6)
        assert is_feasible(at, region)
        assert not is_feasible(just_below, region)

    def test_monotone_in_hpa_volume(self, rng):
        region = region_with_knots()
        for _ in range(100):
            ap = rng.uniform(*DESIGN_BOUNDS[0])
            v = rng.uniform(*DESIGN_BOUNDS[1])
            x = DesignVector(ap, v, 4.0, 6.0e6)
            if is_feasible(x, region):
                higher = DesignVector(ap, min(v + rng.uniform(0.0, 2.0), 10.0), 4.0, 6.0e6)
                assert is_feasible(higher, region)

    def test_out_of_box_in_other_variables(self):
        region = region_with_knots()
        assert not is_feasible(DesignVector(0.1, 8.0, 8.5, 6.0e6), region)
        assert not is_feasible(DesignVector(0.1, 8.0, 4.0, 9.7e6), region)


class TestFlagNonPhysical:
    def test_healthy_run_passes(self):
        assert flag_non_physical(healthy_result(), 100.0) is None

    def test_diverged_run_flagged(self):
        assert flag_non_physical(diverged_result(), 100.0) == "hpa-accumulator-full"

    def test_zero_pressure_flagged(self):
        r = healthy_result(p_bottom=np.zeros(201))
        assert flag_non_physical(r, 100.0) == "non-positive-piston-pressure"

    def test_extreme_pressure_flagged(self):
        r = healthy_result(p_top=np.full(201, 260.0e6))
        assert flag_non_physical(r, 100.0) == "piston-pressure-exceeded"

    def test_large_displacement_flagged(self):
        r = healthy_result(pos_float=np.full(201, 10.5))
        assert flag_non_physical(r, 100.0) == "displacement-exceeded"


class FakePipeline:
    """Flags runs below a configurable HPA-volume threshold per area."""

    def __init__(self, threshold=None, power=100e3):
        self.threshold = threshold
        self.power = power
        self.calls = []

    def __call__(self, x: DesignVector) -> SimulationResult:
        self.calls.append(x)
        if self.threshold is not None and x.hpa_volume < self.threshold(x.piston_area):
            return diverged_result()
        return healthy_result(mean_elec=self.power)


class TestCalibrateRegion:
    def grid(self, n_ap=4, n_hpa=6):
        return CalibrationGrid.from_box(n_ap, n_hpa, lpa_volume=6.0, lpa_precharge=6.0e6)

    def test_nothing_flagged_gives_box_floor(self):
        region, summary = calibrate_region(self.grid(), FakePipeline(), ramp=100.0)
        assert summary["flagged_runs"] == 0
        assert all(v == 0.5 for _, v in region.knots)

    def test_flat_threshold_recovered(self):
        pipeline = FakePipeline(threshold=lambda ap: 1.5)
        region, summary = calibrate_region(self.grid(n_hpa=20), pipeline, ramp=100.0)
        assert summary["flagged_runs"] > 0
        for _, v in region.knots:
            assert v == pytest.approx(1.5, abs=0.5)  # grid resolution
            assert v >= 1.5

    def test_all_flagged_column_raises(self):
        pipeline = FakePipeline(threshold=lambda ap: 100.0 if ap > 0.15 else 0.0)
        with pytest.raises(CalibrationError):
            calibrate_region(self.grid(), pipeline, ramp=100.0)

    def test_grid_covers_box(self):
        g = self.grid(5, 7)
        assert g.n_runs == 35
        assert min(g.ap_values) == DESIGN_BOUNDS[0, 0]
        assert max(g.ap_values) == DESIGN_BOUNDS[0, 1]


class TestPenalizedObjective:
    def region(self):
        return FeasibleRegion(knots=((0.045, 1.5), (0.18, 1.5)))

    def test_infeasible_gets_penalty_floor_plus_distance(self):
        pipeline = FakePipeline()
        x = DesignVector(0.1, 0.6, 4.0, 6.0e6)  # below threshold 1.5
        value = penalized_objective(x, self.region(), pipeline, ramp=100.0)
        assert value >= PENALTY_FLOOR
        assert not pipeline.calls  # refused before simulating

    def test_distance_term_orders_violations(self):
        pipeline = FakePipeline()
        nearer = penalized_objective(
            DesignVector(0.1, 1.4, 4.0, 6.0e6), self.region(), pipeline, 100.0
        )
        farther = penalized_objective(
            DesignVector(0.1, 0.6, 4.0, 6.0e6), self.region(), pipeline, 100.0
        )
        assert PENALTY_FLOOR <= nearer < farther

    def test_feasible_returns_negative_power(self):
        pipeline = FakePipeline(power=57e3)
        x = DesignVector(0.1, 8.0, 4.0, 6.0e6)
        assert penalized_objective(x, self.region(), pipeline, 100.0) == pytest.approx(-57e3)

    def test_objective_ordering_favors_more_power(self):
        region = self.region()
        weak = penalized_objective(
            DesignVector(0.1, 8.0, 4.0, 6.0e6), region, FakePipeline(power=57e3), 100.0
        )
        strong = penalized_objective(
            DesignVector(0.1, 8.0, 4.0, 6.0e6), region, FakePipeline(power=230e3), 100.0
        )
        assert strong < weak < 0.0

    def test_boundary_design_is_simulated(self):
        pipeline = FakePipeline(power=80e3)
        x = DesignVector(0.1, 1.5, 4.0, 6.0e6)  # exactly on the threshold
        value = penalized_objective(x, self.region(), pipeline, 100.0)
        assert value == pytest.approx(-80e3)
        assert len(pipeline.calls) == 1

    def test_runtime_non_physical_gets_bare_floor(self):
        pipeline = FakePipeline(threshold=lambda ap: 100.0)  # everything diverges
        x = DesignVector(0.1, 8.0, 4.0, 6.0e6)
        assert penalized_objective(x, self.region(), pipeline, 100.0) == PENALTY_FLOOR

    def test_pipeline_exception_absorbed(self):
        def exploding(x):
            raise RuntimeError("solver exploded")

        x = DesignVector(0.1, 8.0, 4.0, 6.0e6)
        assert penalized_objective(x, self.region(), exploding, 100.0) == PENALTY_FLOOR

    def test_separation_property(self, rng):
        # every penalized value strictly above every feasible value
        region = self.region()
        feasible_vals, penalized_vals = [], []
        for _ in range(50):
            x = DesignVector(
                rng.uniform(0.045, 0.18),
                rng.uniform(0.5, 10.0),
                rng.uniform(0.5, 8.0),
                rng.uniform(3.5e6, 9.6e6),
            )
            v = penalized_objective(x, region, FakePipeline(power=rng.uniform(1e3, 5e5)), 100.0)
            (feasible_vals if v < PENALTY_FLOOR else penalized_vals).append(v)
        assert feasible_vals and penalized_vals
        assert max(feasible_vals) < min(penalized_vals)

    def test_array_wrapper_rejects_bad_vectors(self):
        objective = make_penalized_objective(self.region(), FakePipeline(), 100.0)
        assert objective(np.array([-0.1, 8.0, 4.0, 6.0e6])) > PENALTY_FLOOR
        assert objective(np.array([0.1, 8.0, 4.0, 6.0e6])) < 0.0
