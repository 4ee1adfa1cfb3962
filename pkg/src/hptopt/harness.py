"""Command implementations behind the CLI: simulate, sweep, calibrate,
optimize, compare.

Every command writes plain delimited text / JSON plus a meta.json carrying
the config hash and seed, and is a pure function of (config, seed): rerun
it and the bytes match.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .feasibility import (
    PENALTY_FLOOR,
    CalibrationError,
    CalibrationGrid,
    FeasibleRegion,
    calibrate_region,
    flag_non_physical,
    make_penalized_objective,
)
from .hpto import DESIGN_BOUNDS, DESIGN_NAMES, SIM_VALID_BOUNDS, DesignVector
from .metrics import Metrics, compute_metrics
from .optimizers import (
    GSF_PRESETS,
    GaParams,
    GsfConfig,
    InfeasibleStartError,
    ObjectiveHandle,
    OptimizationTrace,
    ga_run,
    gsf_run,
    local_gradient_search,
    mvo,
    nelder_mead,
)
from .simulate import SERIES_NAMES, Scenario, build_scenario, simulate_design

__all__ = [
    "OptimizationAborted",
    "NonPhysicalRun",
    "VAR_NAMES",
    "ALGORITHMS",
    "cmd_simulate",
    "cmd_sweep",
    "cmd_calibrate",
    "cmd_optimize",
    "cmd_compare",
    "build_config_scenario",
]

# short variable names used in sweep/trace files
VAR_NAMES = {"ap": 0, "vh0": 1, "vl0": 2, "pl0": 3}

ALGORITHMS = ("nelder-mead", "local-search", "mvo", "ga", *sorted(GSF_PRESETS))


class OptimizationAborted(RuntimeError):
    """An optimization run could not start or finish."""


class NonPhysicalRun(RuntimeError):
    """A standalone simulation was flagged non-physical."""

    def __init__(self, reason: str):
        super().__init__(f"run flagged non-physical: {reason}")
        self.reason = reason


def _ensure_outdir(cfg: RunConfig) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_meta(cfg: RunConfig, out: Path, command: str) -> None:
    _write_json(
        out / "meta.json",
        {
            "command": command,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "version": __version__,
        },
    )


def build_config_scenario(cfg: RunConfig) -> Scenario:
    return build_scenario(
        cfg.spectrum(), cfg.body("float"), cfg.body("spar"), cfg.sim(), cfg.hpto_fixed()
    )


def _design_in_valid_box(x: DesignVector) -> None:
    if not x.in_box(SIM_VALID_BOUNDS):
        raise ConfigError(
            f"design {x.as_array().tolist()} outside the simulatable box "
            f"{SIM_VALID_BOUNDS.tolist()}"
        )


def _write_timeseries(path: Path, result) -> None:
    with open(path, "w") as fh:
        fh.write("time," + ",".join(SERIES_NAMES) + "\n")
        cols = [result.time] + [result[name] for name in SERIES_NAMES]
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_simulate(cfg: RunConfig, design: DesignVector | None = None) -> Metrics:
    """Simulate one design and write timeseries.csv + metrics.json.

    Raises NonPhysicalRun (exit code 3) when the run is flagged.
    """
    if design is None:
        design = cfg.design("default_design")
    _design_in_valid_box(design)
    out = _ensure_outdir(cfg)
    scenario = build_config_scenario(cfg)
    result = simulate_design(design, scenario)
    _write_timeseries(out / "timeseries.csv", result)

    ramp = cfg.sim().ramp_time
    reason = flag_non_physical(result, ramp)
    eff_ramp = ramp if result.time[-1] > ramp else 0.0
    try:
        m = compute_metrics(result, eff_ramp)
        metrics_dict = m.as_dict()
    except ValueError:
        m = None
        metrics_dict = None
    _write_json(
        out / "metrics.json",
        {
            "design": dict(zip(DESIGN_NAMES, design.as_array().tolist())),
            "metrics": metrics_dict,
            "non_physical": reason is not None,
            "reason": reason,
        },
    )
    _write_meta(cfg, out, "simulate")
    if reason is not None:
        raise NonPhysicalRun(reason)
    assert m is not None
    return m


def _sweep_one_pair(cfg, scenario, pair, n: int, out: Path) -> list[Path]:
    names = pair.split(",") if isinstance(pair, str) else list(pair)
    if len(names) != 2 or names[0] == names[1]:
        raise ConfigError(f"sweep pair must name two distinct variables, got {names}")
    for nm in names:
        if nm not in VAR_NAMES:
            raise ConfigError(f"unknown variable {nm!r}; choose from {sorted(VAR_NAMES)}")
    i, j = VAR_NAMES[names[0]], VAR_NAMES[names[1]]
    base = cfg.design("baseline_design").as_array()
    ramp = cfg.sim().ramp_time

    grid_i = np.linspace(DESIGN_BOUNDS[i, 0], DESIGN_BOUNDS[i, 1], n)
    grid_j = np.linspace(DESIGN_BOUNDS[j, 0], DESIGN_BOUNDS[j, 1], n)

    rows = []
    for vi in grid_i:
        for vj in grid_j:
            arr = base.copy()
            arr[i], arr[j] = vi, vj
            x = DesignVector.from_array(arr)
            result = simulate_design(x, scenario)
            bad = flag_non_physical(result, ramp)
            if bad is None:
                m = compute_metrics(result, ramp)
                rows.append((vi, vj, m.mean_elec, m.rpf, 1))
            else:
                rows.append((vi, vj, float("nan"), float("nan"), 0))

    paths = []
    for metric_idx, metric_name in ((2, "power"), (3, "rpf")):
        path = out / f"sweep_{names[0]}_{names[1]}_{metric_name}.csv"
        with open(path, "w") as fh:
            fh.write(f"{names[0]},{names[1]},value,feasible\n")
            for row in rows:
                fh.write(
                    f"{row[0]!r},{row[1]!r},{row[metric_idx]!r},{row[4]}\n"
                )
        paths.append(path)
    return paths


def cmd_sweep(cfg: RunConfig, pair: str, n: int) -> list[Path]:
    """Grid-sweep two design variables (or all 6 pairs with pair='all').

    Writes one power file and one fluctuation-ratio file per pair with
    columns var1,var2,value,feasible; non-physical cells carry nan values
    and feasible=0.
    """
    if n < 2:
        raise ConfigError(f"sweep grid must be at least 2x2, got {n}")
    out = _ensure_outdir(cfg)
    scenario = build_config_scenario(cfg)
    if pair == "all":
        pairs = [",".join(p) for p in combinations(sorted(VAR_NAMES, key=VAR_NAMES.get), 2)]
    else:
        pairs = [pair]
    paths = []
    for p in pairs:
        paths.extend(_sweep_one_pair(cfg, scenario, p, n, out))
    _write_meta(cfg, out, "sweep")
    return paths


def _calibration_grid(cfg: RunConfig) -> CalibrationGrid:
    cal = cfg.raw["region"]["calibration"]
    base = cfg.design("baseline_design")
    return CalibrationGrid.from_box(
        n_ap=int(cal["n_ap"]),
        n_hpa=int(cal["n_hpa"]),
        lpa_volume=base.lpa_volume,
        lpa_precharge=base.lpa_precharge,
    )


def cmd_calibrate(cfg: RunConfig) -> tuple[FeasibleRegion, dict]:
    """Rebuild the feasible region from a simulation sweep and persist it."""
    out = _ensure_outdir(cfg)
    scenario = build_config_scenario(cfg)
    grid = _calibration_grid(cfg)
    ramp = cfg.sim().ramp_time
    region, summary = calibrate_region(
        grid, lambda x: simulate_design(x, scenario), ramp
    )
    region.save(out / "region.json")
    _write_json(
        out / "calibration_summary.json",
        {
            "total_runs": summary["total_runs"],
            "flagged_runs": summary["flagged_runs"],
            "flags": [
                {"ap": k[0], "vh0": k[1], "reason": v} for k, v in sorted(summary["flags"].items())
            ],
            "knots": [list(k) for k in region.knots],
        },
    )
    _write_meta(cfg, out, "calibrate")
    print(
        f"calibration: {summary['flagged_runs']} of {summary['total_runs']} runs "
        f"flagged non-physical; {len(region.knots)} threshold knots"
    )
    return region, summary


def _load_region(cfg: RunConfig, out: Path) -> FeasibleRegion:
    region_cfg = cfg.raw["region"]
    if region_cfg["source"] == "file":
        path = Path(region_cfg["file"])
        if not path.exists():
            raise OptimizationAborted(f"feasible-region file not found: {path}")
        return FeasibleRegion.load(path)
    scenario = build_config_scenario(cfg)
    grid = _calibration_grid(cfg)
    try:
        region, _ = calibrate_region(
            grid, lambda x: simulate_design(x, scenario), cfg.sim().ramp_time
        )
    except CalibrationError as exc:
        raise OptimizationAborted(str(exc)) from exc
    region.save(out / "region.json")
    return region


def _default_budget(cfg: RunConfig, algorithm: str) -> int:
    opt = cfg.raw["optimizer"]
    if algorithm in GSF_PRESETS:
        return GsfConfig.preset(algorithm).total_evaluations
    if algorithm == "mvo":
        m = opt["mvo"]
        return int(m["n_universes"]) * (int(m["n_iter"]) + 1)
    if algorithm == "ga":
        return 2000
    if algorithm == "nelder-mead":
        return 2000
    if algorithm == "local-search":
        return 500
    raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def run_algorithm(
    cfg: RunConfig,
    algorithm: str,
    objective,
    budget: int,
) -> OptimizationTrace:
    """Dispatch one optimizer run over the penalized objective."""
    opt = cfg.raw["optimizer"]
    seed = cfg.seed
    handle = ObjectiveHandle(objective, DESIGN_BOUNDS, budget=budget)
    x0 = cfg.design("baseline_design").as_array()

    if algorithm in GSF_PRESETS:
        gsf_cfg = GsfConfig.preset(algorithm, seed=seed)
        return gsf_run(handle, gsf_cfg)
    if algorithm == "nelder-mead":
        return nelder_mead(handle, x0, tol=float(opt["nelder_mead"]["tol"]))
    if algorithm == "local-search":
        ls = opt["local_search"]
        try:
            return local_gradient_search(
                handle, x0, gtol=float(ls["gtol"]), max_iter=int(ls["max_iter"])
            )
        except InfeasibleStartError as exc:
            raise OptimizationAborted(str(exc)) from exc
    if algorithm == "mvo":
        m = opt["mvo"]
        return mvo(handle, int(m["n_universes"]), int(m["n_iter"]), seed)
    if algorithm == "ga":
        g = opt["ga"]
        params = GaParams(
            crossover_prob=float(g["crossover_prob"]),
            mutation_prob=float(g["mutation_prob"]),
            mutation_sigma_frac=float(g["mutation_sigma_frac"]),
        )
        return ga_run(handle, int(g["npop"]), budget, seed, params)
    raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def _summarize_best(cfg, scenario, trace, algorithm) -> dict:
    best = trace.best_feasible()
    if best is None:
        raise OptimizationAborted("no feasible evaluation in the run")
    design = DesignVector.from_array(best.x)
    result = simulate_design(design, scenario)
    m = compute_metrics(result, cfg.sim().ramp_time)
    return {
        "algorithm": algorithm,
        "iterations": len(trace),
        "best_objective": best.value,
        "design": dict(zip(DESIGN_NAMES, best.x.tolist())),
        "mean_absorbed_W": m.mean_absorbed,
        "mean_mech_W": m.mean_mech,
        "mean_elec_W": m.mean_elec,
        "rpf": m.rpf,
    }


def cmd_optimize(
    cfg: RunConfig,
    algorithm: str | None = None,
    budget: int | None = None,
    convergence_step: int = 10,
) -> dict:
    """Run one optimizer and write trace, summary, and convergence files."""
    algorithm = (algorithm or cfg.raw["optimizer"]["algorithm"]).lower()
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if budget is None:
        budget = cfg.raw["optimizer"].get("budget") or _default_budget(cfg, algorithm)
    budget = int(budget)
    if budget <= 0:
        raise OptimizationAborted(f"refusing an empty run (budget {budget})")
    if algorithm in GSF_PRESETS:
        budget = GsfConfig.preset(algorithm).total_evaluations

    out = _ensure_outdir(cfg)
    region = _load_region(cfg, out)
    scenario = build_config_scenario(cfg)
    ramp = cfg.sim().ramp_time
    objective = make_penalized_objective(
        region, lambda x: simulate_design(x, scenario), ramp
    )

    trace = run_algorithm(cfg, algorithm, objective, budget)
    trace.to_csv(out / f"trace_{algorithm}.csv")

    summary = _summarize_best(cfg, scenario, trace, algorithm)
    _write_json(out / f"summary_{algorithm}.json", summary)

    step = max(int(convergence_step), 1)
    best = trace.best_so_far()
    with open(out / f"convergence_{algorithm}.csv", "w") as fh:
        fh.write("eval_index,best_objective,best_power_W\n")
        for k in range(step - 1, len(best), step):
            power = -best[k] if best[k] < PENALTY_FLOOR else 0.0
            fh.write(f"{k},{best[k]!r},{power!r}\n")
    _write_meta(cfg, out, "optimize")
    return summary


def cmd_compare(cfg: RunConfig, trace_paths, horizon: int | None = None) -> dict:
    """Cross-algorithm report: Table-style rows plus an aligned
    best-so-far power matrix for plotting.

    Traces longer than the horizon are truncated; shorter ones carry their
    final best forward. Malformed trace files are reported and skipped.
    """
    if len(trace_paths) < 2:
        raise ConfigError("compare needs at least two trace files")
    out = _ensure_outdir(cfg)
    scenario = build_config_scenario(cfg)
    ramp = cfg.sim().ramp_time

    traces: list[tuple[str, OptimizationTrace]] = []
    for p in trace_paths:
        p = Path(p)
        try:
            traces.append((p.stem, OptimizationTrace.from_csv(p)))
        except (OSError, ValueError) as exc:
            print(f"skipping {p}: {exc}", file=sys.stderr)
    if not traces:
        raise ConfigError("no readable trace files")

    rows = []
    for name, trace in traces:
        best = trace.best_feasible()
        if best is None:
            print(f"skipping {name}: no feasible evaluation", file=sys.stderr)
            continue
        try:
            design = DesignVector.from_array(best.x)
            result = simulate_design(design, scenario)
            m = compute_metrics(result, ramp)
        except (ValueError, RuntimeError) as exc:
            print(f"skipping {name}: best design does not re-simulate ({exc})", file=sys.stderr)
            continue
        rows.append(
            {
                "run": name,
                "iterations": len(trace),
                **dict(zip(("ap", "vh0", "vl0", "pl0"), best.x.tolist())),
                "mean_absorbed_W": m.mean_absorbed,
                "mean_mech_W": m.mean_mech,
                "mean_elec_W": m.mean_elec,
                "rpf": m.rpf,
            }
        )
    rows.sort(key=lambda r: -r["mean_elec_W"])

    with open(out / "comparison.csv", "w") as fh:
        cols = (
            "run", "iterations", "ap", "vh0", "vl0", "pl0",
            "mean_absorbed_W", "mean_mech_W", "mean_elec_W", "rpf",
        )
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(
                ",".join(str(r[c]) if c in ("run", "iterations") else repr(r[c]) for c in cols)
                + "\n"
            )

    if horizon is None:
        horizon = max(len(t) for _, t in traces)
    horizon = int(horizon)
    matrix = {}
    for name, trace in traces:
        col = np.zeros(horizon)
        best_val = None
        for k in range(horizon):
            if k < len(trace.records):
                r = trace.records[k]
                if r.feasible and (best_val is None or r.value < best_val):
                    best_val = r.value
            col[k] = -best_val if best_val is not None else 0.0
        matrix[name] = col

    with open(out / "aligned_convergence.csv", "w") as fh:
        names = [name for name, _ in traces]
        fh.write("eval_index," + ",".join(names) + "\n")
        for k in range(horizon):
            fh.write(str(k) + "," + ",".join(repr(float(matrix[n][k])) for n in names) + "\n")

    _write_meta(cfg, out, "compare")
    return {"rows": rows, "horizon": horizon}
