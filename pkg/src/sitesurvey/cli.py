"""Command-line front end.

Subcommands::

    sitesurvey fit        pilot CSV -> per-AP hyperparameter JSON
    sitesurvey plan       graph + hyperparameters (+ pilot) -> PlanResult JSON
    sitesurvey evaluate   PlanResult + survey -> LocalizationReport JSON
    sitesurvey benchmark  sweep algorithms x budgets x seeds -> CSV (and optional PNGs)
    sitesurvey demo       write the bundled demo assets to a directory

Exit codes: 0 success, 2 validation, 3 time limit, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .errors import NumericalError, TimeLimitExceeded, ValidationError
from .gp import Hyperparameters, log_marginal_likelihood
from .graph import read_graph
from .planners import ALGORITHMS, DEFAULT_TIME_LIMIT, PlanRequest, PlanResult, make_config, run_planner
from .radio import (
    RadioMap,
    SurveyDataset,
    evaluate_plan_error,
    fit_radio_map,
    make_test_set,
    reference_grid,
)

EXIT_OK, EXIT_VALIDATION, EXIT_TIME_LIMIT, EXIT_NUMERICAL = 0, 2, 3, 4

BENCH_FIELDS = ("algorithm", "budget", "seed", "utility", "cost", "runtime_s", "mean_error", "status")


# ---------------------------------------------------------------- file helpers


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc


def read_hypers(path) -> dict[str, Hyperparameters]:
    """Per-AP hyperparameters; a single bare object is returned under the key ``"*"``."""
    doc = _read_json(path)
    if not isinstance(doc, dict) or not doc:
        raise ValidationError(f"{path}: expected a hyperparameter object")
    if "sigma_f" in doc:
        return {"*": Hyperparameters.from_dict(doc)}
    return {str(ap): Hyperparameters.from_dict(h) for ap, h in sorted(doc.items())}


def planning_hyper(hypers: dict[str, Hyperparameters], ap: str | None = None) -> Hyperparameters:
    """One kernel for planning: the named AP, the only entry, or the per-field median."""
    if ap is not None:
        if ap not in hypers:
            raise ValidationError(f"AP {ap!r} not in hyperparameter file (have {sorted(hypers)})")
        return hypers[ap]
    if len(hypers) == 1:
        return next(iter(hypers.values()))
    hs = list(hypers.values())
    return Hyperparameters(
        *(statistics.median(getattr(h, f) for h in hs) for f in ("sigma_f", "length_scale", "sigma_n", "mean_const"))
    )


def read_survey(path) -> SurveyDataset:
    data = SurveyDataset.from_csv(path)
    if len(data) == 0:
        raise ValidationError(f"{path}: no usable observations")
    return data


def _pilot_points(path) -> np.ndarray:
    if path is None:
        return np.empty((0, 2))
    return read_survey(path).locations()


def _algo_config(path, algo):
    if path is None:
        return None
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    # either {"ga": {...}, "rg": {...}} or the options for the chosen algorithm
    if any(k in ALGORITHMS for k in doc):
        doc = doc.get(algo, {})
    return make_config(algo, doc)


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        FsPath(out).write_text(text)


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    data = read_survey(args.pilot)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        radio_map = fit_radio_map(data, seed=args.seed, n_starts=args.starts)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for ap, h in radio_map.hypers().items():
        xy, rss = data.for_ap(ap)
        print(f"{ap}\tlog_ml={log_marginal_likelihood(xy, rss, h):.6f}")
    _emit(radio_map.hypers_json() + "\n", args.out)
    return EXIT_OK


def _request(args, budget, seed) -> PlanRequest:
    g = read_graph(args.graph)
    hyper = planning_hyper(read_hypers(args.hyper), args.ap)
    end = args.start if args.end is None else args.end
    return PlanRequest(g, args.start, end, budget, hyper, args.interval, _pilot_points(args.pilot), seed)


def cmd_plan(args) -> int:
    req = _request(args, args.budget, args.seed)
    cfg = _algo_config(args.config, args.algo)
    res = run_planner(req, args.algo, cfg, time_limit=args.time_limit)
    _emit(res.to_json(timing=not args.no_timing) + "\n", args.out)
    return EXIT_OK


def _ground_truth(args, graph):
    """Radio map, reference grid and test set for error evaluation."""
    survey = read_survey(args.survey)
    if args.map_hyper:
        hypers = read_hypers(args.map_hyper)
        if "*" in hypers:
            hypers = {ap: hypers["*"] for ap in survey.aps}
        radio_map = RadioMap.from_survey(survey, hypers)
    else:
        radio_map = fit_radio_map(survey, seed=args.seed)
    grid = reference_grid(graph, args.grid_spacing)
    test = make_test_set(radio_map, grid, scans=args.scans, seed=args.seed + 10_007)
    return radio_map, grid, test


def cmd_evaluate(args) -> int:
    g = read_graph(args.graph)
    plan = PlanResult.from_dict(_read_json(args.plan))
    radio_map, grid, test = _ground_truth(args, g)
    rep = evaluate_plan_error(
        plan, radio_map, grid, test, g, args.interval, seed=args.seed, missing_ap=args.missing_ap
    )
    print(f"mean_error={rep.mean_error:.6f}", file=sys.stderr)
    _emit(rep.to_json() + "\n", args.out)
    return EXIT_OK


def _bench_cell(job):
    """One (algorithm, budget, seed) run; failures become a status string."""
    args, algo, budget, seed, truth = job
    row = dict.fromkeys(BENCH_FIELDS, "")
    row.update(algorithm=algo, budget=budget, seed=seed)
    try:
        req = _request(args, budget, seed)
        res = run_planner(req, algo, _algo_config(args.config, algo), time_limit=args.time_limit)
        row.update(utility=res.utility, cost=res.cost, runtime_s=res.runtime if not args.no_timing else 0.0)
        if truth is not None:
            radio_map, grid, test = truth
            rep = evaluate_plan_error(res, radio_map, grid, test, req.graph, args.interval, seed=seed)
            row["mean_error"] = rep.mean_error
        row["status"] = "ok"
    except (TimeLimitExceeded, ValidationError, NumericalError) as exc:
        row["status"] = f"failed:{type(exc).__name__}"
    return row


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _mean_rows(rows, algos, budgets):
    out = []
    for algo in algos:
        for b in budgets:
            ok = [r for r in rows if r["algorithm"] == algo and r["budget"] == b and r["status"] == "ok"]
            row = dict.fromkeys(BENCH_FIELDS, "")
            row.update(algorithm=algo, budget=b, seed="mean", status=f"mean_of_{len(ok)}")
            for f in ("utility", "cost", "runtime_s", "mean_error"):
                vals = [r[f] for r in ok if r[f] != ""]
                if vals:
                    row[f] = float(np.mean(vals))
            out.append(row)
    return out


def cmd_benchmark(args) -> int:
    algos = args.algos
    for a in algos:
        if a not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    budgets = [float(b) for b in args.budgets]
    seeds = list(range(args.seed, args.seed + args.seeds))
    truth = _ground_truth(args, read_graph(args.graph)) if args.survey else None
    jobs = [(args, a, b, s, truth) for a in algos for b in budgets for s in seeds]

    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    rows = []
    try:
        writer = csv.DictWriter(out, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        if args.jobs > 1:
            pool = ProcessPoolExecutor(max_workers=args.jobs)
            results = pool.map(_bench_cell, jobs)
        else:
            pool, results = None, map(_bench_cell, jobs)
        try:
            # results arrive in job order, so the CSV is stable under --jobs
            for row in results:
                rows.append(row)
                writer.writerow({k: _fmt(v) for k, v in row.items()})
                out.flush()
        finally:
            if pool is not None:
                pool.shutdown()
        means = _mean_rows(rows, algos, budgets)
        for row in means:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        out.flush()
    finally:
        if out is not sys.stdout:
            out.close()

    if args.figures:
        from .plotting import plot_benchmark

        for p in plot_benchmark(means, args.figures):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def cmd_demo(args) -> int:
    from .demo import write_demo_assets

    for p in write_demo_assets(args.out):
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_plan_args(p, budget_required=True):
    p.add_argument("--graph", required=True, help="area graph JSON")
    p.add_argument("--hyper", required=True, help="hyperparameter JSON (single or per-AP)")
    p.add_argument("--ap", default=None, help="AP whose kernel drives planning (default: per-field median)")
    p.add_argument("--pilot", default=None, help="pilot survey CSV (x,y,ap,rss)")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--end", type=int, default=None, help="terminal vertex (default: --start)")
    p.add_argument("--interval", type=float, default=0.5, help="sample interval in metres")
    p.add_argument("--config", default=None, help="algorithm options JSON")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="seconds, brute force and rg")
    p.add_argument("--no-timing", action="store_true", help="write runtime 0 so outputs are byte-identical")


def _add_truth_args(p):
    p.add_argument("--survey", default=None, help="ground-truth survey CSV the radio map is fitted to")
    p.add_argument("--map-hyper", default=None, help="per-AP hyperparameters for the radio map (skips fitting)")
    p.add_argument("--grid-spacing", type=float, default=1.0)
    p.add_argument("--scans", type=int, default=1, help="test scans per reference location")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sitesurvey", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit per-AP GP hyperparameters to a pilot survey")
    p.add_argument("--pilot", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=5, help="random restarts per AP")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("plan", help="plan one survey path")
    _add_plan_args(p)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--algo", choices=ALGORITHMS, default="greedy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("evaluate", help="localization error of a planned path")
    p.add_argument("--graph", required=True)
    p.add_argument("--plan", required=True, help="PlanResult JSON")
    _add_truth_args(p)
    p.add_argument("--interval", type=float, default=0.5)
    p.add_argument("--missing-ap", choices=("skip", "floor"), default="skip")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="sweep algorithms, budgets and seeds into a CSV")
    _add_plan_args(p)
    _add_truth_args(p)
    p.add_argument("--budgets", type=float, nargs="+", required=True)
    p.add_argument("--algos", nargs="+", default=["greedy", "ga"])
    p.add_argument("--seeds", type=int, default=5, help="number of seeds per cell")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--figures", default=None, help="directory for PNG plots of the averages")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("demo", help="write demo graphs, pilot surveys and hyperparameters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "evaluate" and not args.survey:
        print("error: evaluate needs --survey", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except TimeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TIME_LIMIT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
