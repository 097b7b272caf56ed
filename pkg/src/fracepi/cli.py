"""Command-line front end.

Usage::

    fracepi <simulate|equilibrium|fit|optimize|costeff|plots> [--config FILE] [--out DIR]
            [--alpha A] [--seed N]

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 sweep not
converged (artifacts are still written). Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (CaseSeriesError, FitFailure, GridAlignmentError,
                          fit_alpha, initial_state, load_case_series,
                          model_counts, synth_series, write_case_series)
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .costeff import CostEffReport, RankingError, Strategy, UndefinedRatioError, \
    efficacy_series, evaluate_strategy, icer_rank
from .epimodels import Model, NoEndemicEquilibriumError, check_state, equilibrium, simulate
from .focp import CSV_COLUMNS, ControlTrajectory, SweepFailure, solve_focp
from .frackernel import DivergenceError, Grid, ParameterDomainError, Trajectory
from .plots import ArtifactMissingError, emit_plots

log = logging.getLogger("fracepi")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNCONVERGED = 0, 2, 3, 4
SUBCOMMANDS = ("simulate", "equilibrium", "fit", "optimize", "costeff", "plots")


class Unconverged(Exception):
    pass


class Outputs:
    """Tracks files written by one run so a failed run leaves nothing behind."""

    def __init__(self, directory: Path):
        self.dir = directory
        self.written: list[Path] = []
        self._created_dir = not directory.exists()

    def path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.written.append(p)
        return p

    def write_csv(self, name: str, header, rows) -> Path:
        p = self.path(name)
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def discard(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        if self._created_dir and self.dir.exists() and not any(self.dir.iterdir()):
            self.dir.rmdir()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- subcommands -----------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Outputs, args) -> None:
    y0 = check_state(cfg.initial_state(), cfg.model)
    traj = simulate(cfg.model, cfg.params, y0, cfg.grid)
    header = ("t",) + cfg.model.compartments
    out.write_csv("trajectory.csv", header, np.column_stack([traj.times, traj.values]))


def cmd_equilibrium(cfg: RunConfig, out: Outputs, args) -> None:
    eq = equilibrium(cfg.model, cfg.params)
    p = cfg.params
    r0 = p.r0 if cfg.model is Model.SEIRS else p.b0 / (p.mu + p.nu)
    out.write_csv("equilibrium.csv", cfg.model.compartments + ("R0",), [tuple(eq) + (r0,)])
    print("(" + ", ".join(f"{v:.4f}" for v in eq) + ")")


def cmd_fit(cfg: RunConfig, out: Outputs, args) -> dict:
    c = cfg.calibration
    inputs = {}
    if c.data:
        series = load_case_series(c.data, c.population_scale)
        inputs[c.data] = _sha256(Path(c.data))
    else:
        y0 = initial_state(cfg.model, cfg.params)
        series = synth_series(cfg.model, cfg.params.replace(alpha=c.synthetic_alpha), y0,
                              c.months, c.population_scale, c.noise, seed=args.seed,
                              nodes_per_month=c.nodes_per_month)
        write_case_series(series, out.path("data.csv"))
    y0 = np.array(cfg.initial) if cfg.initial is not None else \
        initial_state(cfg.model, cfg.params, series, c.rescale_initial)
    res = fit_alpha(cfg.model, cfg.params, y0, series, alpha_min=c.alpha_min,
                    alpha_step=c.alpha_step, refine_tol=c.refine_tol,
                    nodes_per_month=c.nodes_per_month, years=c.relative_years)
    out.write_csv("fit_evaluations.csv", ("alpha", "error"), res.evaluations)
    out.write_csv("fit_summary.csv", ("best_alpha", "error", "relative_error"),
                  [(res.best_alpha, res.error, res.relative_error)])
    classical = model_counts(cfg.model, cfg.params.replace(alpha=1.0), y0, series.months,
                             series.population_scale, c.nodes_per_month)
    best = model_counts(cfg.model, cfg.params.replace(alpha=res.best_alpha), y0, series.months,
                        series.population_scale, c.nodes_per_month)
    out.write_csv("fit_curve.csv", ("month", "label", "data", "model_alpha1", "model_best"),
                  zip(range(series.months), series.labels(), series.counts, classical, best))
    print(f"best_alpha={res.best_alpha:.6g} error={res.error:.6g} "
          f"relative_error={res.relative_error:.6g}%")
    return inputs


def _focp_run(cfg: RunConfig, weights=None):
    if cfg.model is not Model.SEIRS:
        raise ConfigError("model.type", "optimal control is defined for the seirs model only")
    y0 = check_state(cfg.initial_state(), cfg.model)
    return y0, solve_focp(cfg.params, y0, weights or cfg.weights, cfg.grid, cfg.sweep)


def cmd_optimize(cfg: RunConfig, out: Outputs, args) -> None:
    y0, sol = _focp_run(cfg)
    out.write_csv("focp.csv", CSV_COLUMNS, sol.table())
    label = cfg.label or f"alpha={cfg.params.alpha:g}"
    out.write_json("focp_summary.json", {
        "label": label, "alpha": cfg.params.alpha, "objective": sol.objective,
        "iterations": sol.iterations, "final_residual": sol.final_residual,
        "converged": sol.converged, "I0": float(y0[2]), "C": cfg.weights.C,
        "kappa1": cfg.weights.kappa1, "kappa2": cfg.weights.kappa2,
    })
    for name, values in (("kappa1", args.kappa1_sweep), ("kappa2", args.kappa2_sweep)):
        if not values:
            continue
        cols, header = [sol.state.times], ["t"]
        for v in values:
            w = dataclasses.replace(cfg.weights, **{name: v})
            _, s = _focp_run(cfg, w)
            cols.append(efficacy_series(s.state, float(y0[2])))
            header.append(f"F_{name}={v:g}")
        out.write_csv(f"sensitivity_{name}.csv", header, np.column_stack(cols))
    print(f"objective={sol.objective:.6g} iterations={sol.iterations} "
          f"converged={str(sol.converged).lower()}")
    if not sol.converged:
        raise Unconverged(f"sweep residual {sol.final_residual:.3g} after {sol.iterations} iterations")


def load_focp_run(directory) -> tuple[Strategy, dict]:
    d = Path(directory)
    table_path, summary_path = d / "focp.csv", d / "focp_summary.json"
    missing = [str(p) for p in (table_path, summary_path) if not p.is_file()]
    if missing:
        raise ArtifactMissingError(missing)
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    with table_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{table_path}: unexpected columns {header}")
        data = np.array([[float(x) for x in row] for row in reader])
    t = data[:, 0]
    grid = Grid(float(t[0]), float(t[-1]), len(t) - 1)
    state = Trajectory(grid, data[:, 1:5])
    control = ControlTrajectory(grid, data[:, 9])
    I0 = float(summary.get("I0", data[0, 3]))
    return Strategy(summary.get("label", d.name), state, control, I0, float(summary.get("C", 1.0))), summary


def cmd_costeff(cfg: RunConfig, out: Outputs, args) -> dict:
    if not args.runs:
        raise ConfigError("runs", "costeff needs at least one optimize output directory")
    strategies, inputs = [], {}
    for d in args.runs:
        s, _ = load_focp_run(d)
        strategies.append(s)
        inputs[str(Path(d) / "focp.csv")] = _sha256(Path(d) / "focp.csv")
    if len(strategies) == 1:
        row = evaluate_strategy(strategies[0])
        row.ICER = row.ACER
        report = CostEffReport([row], cfg.costeff_population_scale)
    else:
        report = icer_rank(strategies, cfg.costeff_population_scale)
    rows, records = report.rows, report.as_records()
    header = list(records[0])
    out.write_csv("costeff.csv", header, [[r[k] for k in header] for r in records])
    for r in rows:
        print(f"{r.label}: A={r.A:.6g} TC={r.TC:.6g} ACER={r.ACER:.6g} "
              f"Fbar={r.Fbar:.6g} ICER={r.ICER:.6g}")
    return inputs


def cmd_plots(cfg: RunConfig, out: Outputs, args) -> None:
    source = Path(args.source) if args.source else out.dir
    for p in emit_plots(source, out.dir / "plots"):
        out.written.append(p)
        print(p)


COMMANDS = {
    "simulate": cmd_simulate, "equilibrium": cmd_equilibrium, "fit": cmd_fit,
    "optimize": cmd_optimize, "costeff": cmd_costeff, "plots": cmd_plots,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracepi", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        p.add_argument("--alpha", type=float, help="override model.alpha")
        p.add_argument("--seed", type=int, help="seed for synthetic data")
        if name == "optimize":
            p.add_argument("--kappa1-sweep", type=_float_list, default=None,
                           help="comma-separated kappa1 values for an efficacy sensitivity run")
            p.add_argument("--kappa2-sweep", type=_float_list, default=None)
        if name == "costeff":
            p.add_argument("runs", nargs="*", help="directories written by 'optimize'")
        if name == "plots":
            p.add_argument("--source", help="artifact directory (default: --out)")
    return parser


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _error(kind: str, message: str, key: str | None = None) -> None:
    rec = {"error": kind, "message": message}
    if key is not None:
        rec["key"] = key
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config)
    if args.alpha is not None:
        if not (0 < args.alpha <= 1) or not math.isfinite(args.alpha):
            raise ConfigError("alpha", f"--alpha {args.alpha} out of domain, must be in (0, 1]")
        cfg = dataclasses.replace(cfg, params=cfg.params.replace(alpha=args.alpha),
                                  explicit_keys=cfg.explicit_keys | {"model.alpha"})
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=str(args.out))
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        _error("config", str(exc), exc.key)
        return EXIT_CONFIG

    out = Outputs(Path(cfg.output_dir))
    status = EXIT_OK
    try:
        inputs = COMMANDS[args.command](cfg, out, args) or {}
    except Unconverged as exc:
        _error("unconverged", str(exc))
        status, inputs = EXIT_UNCONVERGED, {}
    except (ConfigError, CaseSeriesError, FileNotFoundError, ArtifactMissingError,
            NoEndemicEquilibriumError, ParameterDomainError, GridAlignmentError) as exc:
        out.discard()
        _error("config", str(exc), getattr(exc, "key", None))
        return EXIT_CONFIG
    except (DivergenceError, SweepFailure, FitFailure, RankingError,
            UndefinedRatioError, FloatingPointError) as exc:
        out.discard()
        _error("numerical", str(exc))
        return EXIT_NUMERIC

    if args.config is not None:
        inputs[str(args.config)] = _sha256(args.config)
    out.write_json("manifest.json" if args.command != "plots" else "manifest_plots.json", {
        "command": args.command,
        "config": serialize_config(cfg).splitlines(),
        "config_sha256": hashlib.sha256(serialize_config(cfg).encode()).hexdigest(),
        "defaults_used": cfg.defaults_used,
        "inputs": dict(sorted(inputs.items())),
        "seed": args.seed,
        "outputs": sorted(p.name for p in out.written if p.suffix != ".json" or
                          not p.name.startswith("manifest")),
        "versions": {"fracepi": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "status": status,
    })
    return status


def main(argv=None) -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
