import copy
import json
from pathlib import Path

import numpy as np
import pytest

from hptopt.cli import main
from hptopt.config import ConfigError, RunConfig, default_config, load_config
from hptopt.feasibility import FeasibleRegion
from hptopt.harness import (
    NonPhysicalRun,
    OptimizationAborted,
    cmd_calibrate,
    cmd_compare,
    cmd_optimize,
    cmd_simulate,
    cmd_sweep,
)
from hptopt.hpto import DesignVector
from hptopt.optimizers import OptimizationTrace


def reduced_raw(out_dir, **sim_overrides):
    raw = copy.deepcopy(default_config().raw)
    raw["sim"].update({"duration": 120.0, "ramp_time": 30.0, "dt": 0.05})
    raw["sim"].update(sim_overrides)
    raw["region"]["calibration"] = {"n_ap": 4, "n_hpa": 6}
    raw["output_dir"] = str(out_dir)
    return raw


@pytest.fixture()
def cfg(tmp_path):
    return RunConfig(raw=reduced_raw(tmp_path / "out"))


class TestConfig:
    def test_defaults_validate(self):
        assert default_config().seed == 2024

    def test_load_from_file_with_partial_overrides(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"seed": 99, "sim": {"dt": 0.02}}))
        cfg = load_config(p)
        assert cfg.seed == 99
        assert cfg.sim().dt == 0.02
        assert cfg.sim().duration == 400.0  # untouched default

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"simulation": {}}))
        with pytest.raises(ConfigError, match="unknown configuration key"):
            load_config(p)

    def test_syntax_error_carries_line(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text('{\n  "seed": 5,\n  bad\n}')
        with pytest.raises(ConfigError, match=r":3:"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_invalid_values_surface_as_config_errors(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"sim": {"dt": 0.5}}))
        with pytest.raises(ConfigError):
            load_config(p)

    def test_seed_and_out_overrides(self, tmp_path):
        cfg = load_config(None, seed=7, out_dir=tmp_path / "x")
        assert cfg.seed == 7
        assert cfg.output_dir == tmp_path / "x"

    def test_hash_tracks_content(self):
        a = default_config()
        b = a.with_overrides(seed=1)
        assert a.config_hash() != b.config_hash()
        assert a.config_hash() == default_config().config_hash()


class TestCmdSimulate:
    def test_writes_timeseries_and_metrics(self, cfg):
        m = cmd_simulate(cfg)
        out = cfg.output_dir
        assert (out / "timeseries.csv").exists()
        payload = json.loads((out / "metrics.json").read_text())
        assert payload["non_physical"] is False
        assert len(payload["metrics"]) == 9
        assert payload["metrics"]["mean_elec"] == m.mean_elec
        header = (out / "timeseries.csv").read_text().splitlines()[0]
        assert header.startswith("time,pos_float,")

    def test_reference_design_is_accepted_despite_box(self, cfg):
        # piston area 0.038 sits below the optimization box on purpose
        m = cmd_simulate(cfg, DesignVector(0.038, 8.5, 6.0, 9.6e6))
        assert m.mean_elec > 0.0

    def test_wild_design_refused_before_running(self, cfg):
        with pytest.raises(ConfigError, match="outside the simulatable box"):
            cmd_simulate(cfg, DesignVector(0.038, 8.5, 6.0, 9.6e10))
        assert not (cfg.output_dir / "timeseries.csv").exists()

    def test_non_physical_run_raises_after_writing(self, cfg):
        with pytest.raises(NonPhysicalRun, match="hpa-accumulator-full"):
            cmd_simulate(cfg, DesignVector(0.18, 0.5, 6.0, 6.0e6))
        payload = json.loads((cfg.output_dir / "metrics.json").read_text())
        assert payload["non_physical"] is True

    def test_byte_identical_rerun(self, cfg):
        cmd_simulate(cfg)
        first = {p.name: p.read_bytes() for p in cfg.output_dir.iterdir()}
        cmd_simulate(cfg)
        second = {p.name: p.read_bytes() for p in cfg.output_dir.iterdir()}
        assert first == second


class TestCmdSweep:
    def test_single_pair_grid_size(self, cfg):
        paths = cmd_sweep(cfg, "ap,vh0", 2)
        assert len(paths) == 2
        for p in paths:
            lines = Path(p).read_text().splitlines()
            assert lines[0] in ("ap,vh0,value,feasible",)
            assert len(lines) == 1 + 4  # 2x2 grid

    def test_all_pairs(self, cfg):
        paths = cmd_sweep(cfg, "all", 2)
        assert len(paths) == 12  # C(4,2) pairs x 2 metrics
        names = {Path(p).name for p in paths}
        assert "sweep_ap_vh0_power.csv" in names
        assert "sweep_vl0_pl0_rpf.csv" in names

    def test_unknown_variable(self, cfg):
        with pytest.raises(ConfigError, match="unknown variable"):
            cmd_sweep(cfg, "ap,bogus", 2)

    def test_degenerate_grid_rejected(self, cfg):
        with pytest.raises(ConfigError):
            cmd_sweep(cfg, "ap,vh0", 1)


class TestCmdCalibrate:
    def test_flags_a_proper_subset(self, cfg):
        region, summary = cmd_calibrate(cfg)
        assert 0 < summary["flagged_runs"] < summary["total_runs"]
        assert (cfg.output_dir / "region.json").exists()
        loaded = FeasibleRegion.load(cfg.output_dir / "region.json")
        assert loaded.knots == region.knots

    def test_threshold_knots_monotone_non_decreasing(self, cfg):
        region, _ = cmd_calibrate(cfg)
        vols = [v for _, v in region.knots]
        assert all(b >= a for a, b in zip(vols, vols[1:]))

    def test_byte_identical_rerun(self, cfg):
        cmd_calibrate(cfg)
        first = (cfg.output_dir / "region.json").read_bytes()
        cmd_calibrate(cfg)
        assert (cfg.output_dir / "region.json").read_bytes() == first


class TestCmdOptimize:
    def test_zero_budget_refused(self, cfg):
        with pytest.raises(OptimizationAborted, match="empty run"):
            cmd_optimize(cfg, "nelder-mead", budget=0)

    def test_unknown_algorithm(self, cfg):
        with pytest.raises(ConfigError, match="unknown algorithm"):
            cmd_optimize(cfg, "simulated-annealing", budget=10)

    def test_nelder_mead_end_to_end(self, cfg):
        summary = cmd_optimize(cfg, "nelder-mead", budget=40)
        out = cfg.output_dir
        trace = OptimizationTrace.from_csv(out / "trace_nelder-mead.csv")
        assert len(trace) == 40
        assert summary["iterations"] == 40
        # the summary design must be feasible and reproduce its objective
        region = FeasibleRegion.load(out / "region.json")
        from hptopt.feasibility import is_feasible

        best = DesignVector(**summary["design"])
        assert is_feasible(best, region)
        assert summary["mean_elec_W"] == pytest.approx(-summary["best_objective"], rel=1e-10)

    def test_region_loaded_from_file(self, cfg, tmp_path):
        region = FeasibleRegion(knots=((0.045, 0.5), (0.18, 0.5)))
        rpath = tmp_path / "region.json"
        region.save(rpath)
        raw = copy.deepcopy(cfg.raw)
        raw["region"] = {"source": "file", "file": str(rpath), "calibration": {"n_ap": 3, "n_hpa": 3}}
        summary = cmd_optimize(RunConfig(raw=raw), "nelder-mead", budget=30)
        assert summary["iterations"] == 30

    def test_missing_region_file_aborts(self, cfg, tmp_path):
        raw = copy.deepcopy(cfg.raw)
        raw["region"] = {"source": "file", "file": str(tmp_path / "absent.json"),
                        "calibration": {"n_ap": 3, "n_hpa": 3}}
        with pytest.raises(OptimizationAborted, match="not found"):
            cmd_optimize(RunConfig(raw=raw), "nelder-mead", budget=10)

    def test_convergence_file_downsampled(self, cfg):
        cmd_optimize(cfg, "nelder-mead", budget=40, convergence_step=10)
        lines = (cfg.output_dir / "convergence_nelder-mead.csv").read_text().splitlines()
        assert lines[0] == "eval_index,best_objective,best_power_W"
        assert len(lines) == 1 + 4  # indices 9, 19, 29, 39

    def test_mvo_budget_derived_from_params(self, cfg):
        raw = copy.deepcopy(cfg.raw)
        raw["optimizer"]["mvo"] = {"n_universes": 4, "n_iter": 3}
        summary = cmd_optimize(RunConfig(raw=raw), "mvo")
        assert summary["iterations"] == 4 * 4

    def test_local_search_starts_from_baseline(self, cfg):
        summary = cmd_optimize(cfg, "local-search", budget=30)
        assert summary["algorithm"] == "local-search"
        assert 0 < summary["iterations"] <= 30

    def test_ga_consumes_exact_budget(self, cfg):
        raw = copy.deepcopy(cfg.raw)
        raw["optimizer"]["ga"]["npop"] = 8
        summary = cmd_optimize(RunConfig(raw=raw), "ga", budget=24)
        assert summary["iterations"] == 24


class TestCmdCompare:
    def _synthetic_trace(self, path, values, designs=None):
        trace = OptimizationTrace()
        for i, v in enumerate(values):
            x = designs[i] if designs else np.array([0.10, 8.5, 6.0, 6.0e6])
            trace.append(np.asarray(x), float(v), v < 1e9, 0.0)
        trace.to_csv(path)
        return path

    def test_truncates_and_extends_to_horizon(self, cfg, tmp_path):
        a = self._synthetic_trace(tmp_path / "a.csv", [-1e4, -2e4, -3e4])
        b = self._synthetic_trace(tmp_path / "b.csv", np.linspace(-1e4, -9e4, 10))
        report = cmd_compare(cfg, [a, b], horizon=5)
        lines = (cfg.output_dir / "aligned_convergence.csv").read_text().splitlines()
        assert lines[0] == "eval_index,a,b"
        assert len(lines) == 1 + 5
        # short trace carries its final best forward
        last = lines[-1].split(",")
        assert float(last[1]) == pytest.approx(3e4)
        assert report["horizon"] == 5

    def test_default_horizon_is_longest(self, cfg, tmp_path):
        a = self._synthetic_trace(tmp_path / "a.csv", [-1e4, -2e4])
        b = self._synthetic_trace(tmp_path / "b.csv", [-1e4] * 7)
        report = cmd_compare(cfg, [a, b])
        assert report["horizon"] == 7

    def test_rows_sorted_by_power(self, cfg, tmp_path):
        weak = self._synthetic_trace(
            tmp_path / "weak.csv", [-1e3],
            designs=[np.array([0.06, 8.5, 6.0, 6.0e6])],
        )
        strong = self._synthetic_trace(
            tmp_path / "strong.csv", [-2e3],
            designs=[np.array([0.12, 8.5, 6.0, 6.0e6])],
        )
        report = cmd_compare(cfg, [weak, strong])
        powers = [r["mean_elec_W"] for r in report["rows"]]
        assert powers == sorted(powers, reverse=True)

    def test_best_so_far_columns_non_decreasing(self, cfg, tmp_path):
        rng = np.random.default_rng(5)
        a = self._synthetic_trace(tmp_path / "a.csv", -rng.uniform(1e3, 9e4, size=20))
        b = self._synthetic_trace(tmp_path / "b.csv", -rng.uniform(1e3, 9e4, size=12))
        cmd_compare(cfg, [a, b], horizon=20)
        data = np.genfromtxt(
            cfg.output_dir / "aligned_convergence.csv", delimiter=",", names=True
        )
        for col in ("a", "b"):
            assert np.all(np.diff(data[col]) >= 0.0)

    def test_malformed_trace_skipped(self, cfg, tmp_path, capsys):
        good_a = self._synthetic_trace(tmp_path / "a.csv", [-1e4])
        good_b = self._synthetic_trace(tmp_path / "b.csv", [-2e4])
        bad = tmp_path / "bad.csv"
        bad.write_text("this,is,not\na,trace,file\n")
        report = cmd_compare(cfg, [good_a, bad, good_b])
        assert len(report["rows"]) == 2
        assert "skipping" in capsys.readouterr().err

    def test_needs_two_traces(self, cfg, tmp_path):
        a = self._synthetic_trace(tmp_path / "a.csv", [-1e4])
        with pytest.raises(ConfigError):
            cmd_compare(cfg, [a])

    def test_identical_traces_identical_rows(self, cfg, tmp_path):
        a = self._synthetic_trace(tmp_path / "a.csv", [-1e4, -3e4])
        b = self._synthetic_trace(tmp_path / "b.csv", [-1e4, -3e4])
        report = cmd_compare(cfg, [a, b])
        r0, r1 = report["rows"]
        assert {k: v for k, v in r0.items() if k != "run"} == {
            k: v for k, v in r1.items() if k != "run"
        }


def test_shipped_example_config_matches_defaults():
    shipped = Path(__file__).parent.parent / "configs" / "default.json"
    cfg = load_config(shipped)
    assert cfg.raw == default_config().raw


class TestCli:
    def _write_cfg(self, tmp_path, **sim_overrides):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(reduced_raw(tmp_path / "out", **sim_overrides)))
        return p

    def test_simulate_success_exit_zero(self, tmp_path, capsys):
        p = self._write_cfg(tmp_path)
        assert main(["simulate", "--config", str(p)]) == 0
        assert "mean electrical power" in capsys.readouterr().out

    def test_config_error_exit_two(self, tmp_path, capsys):
        p = tmp_path / "cfg.json"
        p.write_text("{broken")
        assert main(["simulate", "--config", str(p)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_non_physical_exit_three(self, tmp_path):
        p = self._write_cfg(tmp_path)
        code = main(["simulate", "--config", str(p), "--design", "0.18,0.5,6.0,6.0e6"])
        assert code == 3

    def test_aborted_optimization_exit_four(self, tmp_path):
        p = self._write_cfg(tmp_path)
        code = main(["optimize", "--config", str(p), "--algorithm", "nelder-mead", "--budget", "0"])
        assert code == 4

    def test_bad_design_flag_exit_two(self, tmp_path):
        p = self._write_cfg(tmp_path)
        assert main(["simulate", "--config", str(p), "--design", "1,2,3"]) == 2

    def test_seed_override_changes_output(self, tmp_path):
        p = self._write_cfg(tmp_path)
        out1 = tmp_path / "s1"
        out2 = tmp_path / "s2"
        assert main(["simulate", "--config", str(p), "--seed", "1", "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(p), "--seed", "2", "--out", str(out2)]) == 0
        a = (out1 / "timeseries.csv").read_bytes()
        b = (out2 / "timeseries.csv").read_bytes()
        assert a != b

    def test_sweep_cli(self, tmp_path, capsys):
        p = self._write_cfg(tmp_path)
        assert main(["sweep", "--config", str(p), "--pair", "ap,vh0", "--grid", "2"]) == 0
        assert "wrote 2 sweep files" in capsys.readouterr().out

    def test_compare_cli(self, tmp_path):
        p = self._write_cfg(tmp_path)
        trace = OptimizationTrace()
        trace.append(np.array([0.10, 8.5, 6.0, 6.0e6]), -1.0e4, True, 0.0)
        trace.to_csv(tmp_path / "t1.csv")
        trace.to_csv(tmp_path / "t2.csv")
        code = main([
            "compare", "--config", str(p),
            str(tmp_path / "t1.csv"), str(tmp_path / "t2.csv"), "--horizon", "3",
        ])
        assert code == 0
