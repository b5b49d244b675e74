"""Command-line front end: ``aeroflat run SCENARIO``."""
import argparse
import csv
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels, track
from .aircraft import load_aircraft, resolve_path
from .errors import AeroflatError, ConfigError
from .flatplan import QUANTITIES
from .genflat import TrimProblem, generalized_flat_parametrization, trim_values
from .scenario import MODES, bundled_scenarios, load_scenario, resolve_scenario, to_document
from .sim import motion_planning, position_error, simulate, tracking_metrics

PLOTTED = ("x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "p", "q", "r",
           "F", "eta", "delta_l", "delta_m", "delta_n")
TRIM_COLUMNS = ("model", "alpha", "beta", "gamma", "mu", "V", "delta_l", "delta_m", "delta_n", "F", "seconds")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _fmt(v):
    return repr(float(v))


def write_plan_csv(plan, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "j"] + list(QUANTITIES))
        for i, row in enumerate(plan.steps):
            for j, sv in enumerate(row):
                w.writerow([i, _fmt(plan.times[i]), j] + [_fmt(sv[q].value) for q in QUANTITIES])


def trim_table(cfg, params):
    rows = []
    for row in cfg.trim_rows:
        fixed = dict(cfg.trim_fixed, alpha=row.alpha, beta=row.beta)
        start = time.perf_counter()
        vals = trim_values(TrimProblem(fixed, model=row.model), params)
        vals.update(model=row.model, seconds=time.perf_counter() - start)
        rows.append(vals)
    return rows


def convergence_table(cfg, params):
    out = []
    traj, choice, mode = cfg.flat_trajectory(), cfg.choice(), cfg.control_mode()
    for J in range(cfg.convergence_J + 1):
        its = generalized_flat_parametrization(cfg.convergence_t, traj, choice, cfg.iteration_plan(J),
                                               params=params, mode=mode)
        sv = its[-1]
        out.append({"J": J, **{k: sv[k].value for k in ("F", "delta_l", "delta_m", "delta_n")}})
    return out


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([r[k] if isinstance(r[k], (str, int)) else _fmt(r[k]) for k in header])


def write_plots(outdir, plan, runs):
    """One SVG per quantity: plan j=0, plan j=J and every simulation."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "aeroflat"

    grid = np.linspace(plan.times[0], plan.times[-1], 20 * plan.n_steps + 1)
    ref = {j: np.array([plan.blend(j, t, PLOTTED) for t in grid]) for j in sorted({0, plan.J})}
    styles = {"open_loop": ("c", "open loop"), "feedback": ("darkblue", "feedback")}
    paths = []
    pdir = outdir / "plots"
    pdir.mkdir(exist_ok=True)
    for k, q in enumerate(PLOTTED):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(grid, ref[0][:, k], "r", label="flat plan (j=0)")
        if plan.J != 0:
            ax.plot(grid, ref[plan.J][:, k], "g", label=f"generalized plan (j={plan.J})")
        for name, res in runs.items():
            color, label = styles[name]
            ax.plot(res.times, res.column(q), color=color, label=label)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(q)
        ax.legend(fontsize="small")
        fig.tight_layout()
        p = pdir / f"{q}.svg"
        fig.savefig(p, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(p)
    return paths


def run_scenario(cfg, modes=None, outdir=None, aircraft=None, J=None, steps=None, substeps=None,
                 verbose=False, plots=True):
    """Execute the requested modes; returns the manifest dictionary."""
    modes = tuple(modes or cfg.modes)
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}; allowed {MODES}")
    if J is not None:
        cfg.J = int(J)
    if steps is not None:
        cfg.steps = int(steps)
    if substeps is not None:
        cfg.substeps = int(substeps)
    cfg.iteration_plan()
    ac_ref = aircraft or cfg.aircraft
    ac_path = resolve_path(ac_ref, cfg.aircraft_base())
    params = load_aircraft(ac_ref, cfg.aircraft_base())
    outdir = Path(outdir or cfg.output or Path("runs") / cfg.name)
    outdir.mkdir(parents=True, exist_ok=True)

    manifest = {
        "scenario": cfg.name,
        "scenario_file": cfg.source,
        "scenario_sha256": _sha256(cfg.source) if cfg.source and os.path.isfile(cfg.source) else None,
        "scenario_document": to_document(cfg),
        "aircraft_file": str(ac_path),
        "aircraft_sha256": _sha256(ac_path),
        "modes": list(modes),
        "versions": {"aeroflat": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "kernels": kernels.BACKEND, "platform": platform.platform()},
        "timings": {},
        "metrics": {},
        "artifacts": [],
    }
    artifacts = []

    if "trim_table" in modes:
        if not cfg.trim_rows:
            raise ConfigError(f"{cfg.name}: trim_table mode needs a 'trim_table' section")
        t0 = time.perf_counter()
        rows = trim_table(cfg, params)
        manifest["timings"]["trim_table_s"] = time.perf_counter() - t0
        _write_rows(outdir / "trim_table.csv", TRIM_COLUMNS, rows)
        artifacts.append(outdir / "trim_table.csv")

    if "convergence_table" in modes:
        if cfg.convergence_t is None:
            raise ConfigError(f"{cfg.name}: convergence_table mode needs a 'convergence_table' section")
        t0 = time.perf_counter()
        rows = convergence_table(cfg, params)
        manifest["timings"]["convergence_table_s"] = time.perf_counter() - t0
        _write_rows(outdir / "convergence_table.csv", ("J", "F", "delta_l", "delta_m", "delta_n"), rows)
        artifacts.append(outdir / "convergence_table.csv")

    sim_modes = [m for m in ("open_loop", "feedback") if m in modes]
    if "plan" in modes or sim_modes:
        plan = motion_planning(cfg.t_start, cfg.t_end, cfg.steps, cfg.flat_trajectory(), cfg.choice(),
                               cfg.iteration_plan(), params, mode=cfg.control_mode(), verbose=verbose)
        manifest["timings"].update(plan.timings)
        write_plan_csv(plan, outdir / "plan.csv")
        artifacts.append(outdir / "plan.csv")
        runs = {}
        if "open_loop" in modes:
            for j in sorted({0, plan.J}):
                res = simulate(plan, params, "open_loop", j=j, substeps=cfg.substeps, verbose=verbose)
                name = "open_loop.csv" if j == plan.J else "open_loop_j0.csv"
                res.to_csv(outdir / name)
                artifacts.append(outdir / name)
                manifest["timings"][f"open_loop_j{j}_s"] = res.timings["simulation_s"]
                manifest["metrics"][f"open_loop_j{j}_max_position_error"] = position_error(res, plan, j)
                if j == plan.J:
                    runs["open_loop"] = res
        if "feedback" in modes:
            t0 = time.perf_counter()
            law = track.design_law(plan, params, cfg.pole_config(), model=cfg.feedback_model)
            manifest["timings"]["feedback_design_s"] = time.perf_counter() - t0
            law.to_csv(outdir / "gains.csv")
            res = simulate(plan, params, "feedback", law=law, substeps=cfg.substeps,
                           perturbation=cfg.perturbation, verbose=verbose)
            res.to_csv(outdir / "feedback.csv")
            artifacts += [outdir / "gains.csv", outdir / "feedback.csv"]
            manifest["timings"]["feedback_s"] = res.timings["simulation_s"]
            m = tracking_metrics(res, plan, window=1.0)
            manifest["metrics"]["feedback_final_window"] = {k: v for k, v in m.items() if k != "_window"}
            runs["feedback"] = res
        if plots:
            artifacts += write_plots(outdir, plan, runs)

    manifest["artifacts"] = [{"path": str(p.relative_to(outdir)), "sha256": _sha256(p)} for p in artifacts]
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return manifest


def build_parser():
    ap = argparse.ArgumentParser(prog="aeroflat", description="Flat and generalized-flat motion planning "
                                 "and simulation for fixed-wing aircraft.")
    ap.add_argument("--version", action="version", version=f"aeroflat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    run.add_argument("scenario", help="scenario YAML path or bundled name")
    run.add_argument("--aircraft", help="aircraft file or bundled name overriding the scenario's")
    run.add_argument("--modes", nargs="+", choices=MODES, help="modes to run (default: the scenario's)")
    run.add_argument("-J", type=int, help="number of generalized-flatness iterations")
    run.add_argument("--steps", type=int, help="number of planning intervals")
    run.add_argument("--substeps", type=int, help="RK4 substeps per planning interval")
    run.add_argument("-o", "--output", help="output directory (default runs/<scenario name>)")
    run.add_argument("--no-plots", action="store_true", help="skip SVG output")
    run.add_argument("-v", "--verbose", action="store_true", help="progress on standard error")
    sub.add_parser("list", help="list bundled scenarios")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in bundled_scenarios():
            print(name)
        return 0
    try:
        cfg = load_scenario(resolve_scenario(args.scenario))
        manifest = run_scenario(cfg, args.modes, args.output, args.aircraft, args.J, args.steps, args.substeps,
                                args.verbose, plots=not args.no_plots)
    except AeroflatError as e:
        print(f"aeroflat: {type(e).__name__}: {e} (scenario {args.scenario})", file=sys.stderr)
        return e.exit_code
    for a in manifest["artifacts"]:
        print(a["path"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
