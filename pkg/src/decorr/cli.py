"""Command-line entry point: ``decorr <subcommand> [options]``.

Every subcommand writes ``manifest.json`` into ``--out-dir`` with the fully
resolved arguments, so a run can be repeated exactly. Variable indices in
the outputs are 1-based column positions of the input file; floats are
written with ``repr`` so identical runs give byte-identical files.

Exit status is 0 on success, 1 on any error (one JSON line on stderr) and,
for ``select``, 2 when no penalty reached stability 0.75 and the
one-standard-deviation rule supplied the operating point.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import load_csv, standardize
from .diagnostics import condition_number, irrepresentable_norm
from .errors import DecorrError, NotPD
from .orthonormalize import gram_schmidt
from .pipeline import PIPELINES, build_design, select
from .screening import DEFAULT_THRESHOLD, adaptive_rank
from .simulate import PRESETS, generate_dataset, load_scenario, run_experiments, with_overrides
from .stability import convergence_trace, select_variables

log = logging.getLogger("decorr")

EXIT_OK, EXIT_ERROR, EXIT_FALLBACK = 0, 1, 2
DEFAULT_OUT_DIR = "decorr_out"


class UsageError(Exception):
    """Bad combination of command-line options."""


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _pi_thr(text):
    value = float(text)
    if not 0.5 < value <= 1:
        raise argparse.ArgumentTypeError("pi-thr must lie in (0.5, 1]")
    return value


def _ratio(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("grid-ratio must lie in (0, 1)")
    return value


def _index_list(text):
    try:
        items = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not items or min(items) < 1:
        raise argparse.ArgumentTypeError("indices are 1-based and must be positive")
    return items


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _manifest(args, out: Path, extra=None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    for k, v in config.items():
        if isinstance(v, Path):
            config[k] = str(v)
    body = {"tool": "decorr", "version": __version__, "command": args.command, "config": config}
    if extra:
        body.update(extra)
    _write_json(out / "manifest.json", body)


def _out_dir(args) -> Path:
    out = Path(args.out_dir or DEFAULT_OUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    if args.input is None:
        raise UsageError("--input is required")
    path = Path(args.input)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    X, y, names = load_csv(path, args.response)
    return standardize(X, y, names)


def _select_options(args) -> dict:
    return dict(
        grid_count=args.grid_count,
        grid_ratio=args.grid_ratio,
        threshold=args.screen_threshold,
        gs_mode=args.gs_mode,
    )


def cmd_rank(args) -> int:
    d = _load(args)
    out = _out_dir(args)
    ranking = adaptive_rank(d, min(args.screen_threshold, d.p))
    rows = [
        (r + 1, j + 1, d.column_names[j], _fmt(ranking.scores[j]))
        for r, j in enumerate(ranking.order)
    ]
    _write_rows(out / "ranking.csv", ("rank", "original_index", "name", "score"), rows)
    _manifest(args, out, {"penalty_used": ranking.penalty_used, "iterations": ranking.iterations})
    log.info("ranked %d variables (penalty %g, %d iterations)", d.p, ranking.penalty_used, ranking.iterations)
    return EXIT_OK


def cmd_decorrelate(args) -> int:
    d = _load(args)
    out = _out_dir(args)
    design = build_design(d, args.pipeline, args.screen_threshold, gs_mode=args.gs_mode)
    names = [d.column_names[j] for j in design.ordering]
    _write_rows(
        out / "ordering.csv",
        ("position", "original_index", "name"),
        [(k + 1, j + 1, names[k]) for k, j in enumerate(design.ordering)],
    )
    extra = {"columns_kept": int(design.matrix.shape[1])}
    if design.factors is not None:
        f = design.factors
        Q, R = f.Q, f.R
        extra["orthonormality_error"] = float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))))
        if args.dump_qr:
            _write_rows(out / "Q.csv", names, ([_fmt(v) for v in row] for row in Q))
            _write_rows(out / "R.csv", names, ([_fmt(v) for v in row] for row in R))
    _manifest(args, out, extra)
    return EXIT_OK


def _write_selection(out: Path, res, names, pi_thr) -> dict:
    lam = res.tuning.lam
    freqs = res.frequencies(lam)
    _write_rows(
        out / "frequencies.csv",
        ("variable", "name", "frequency"),
        [(j + 1, names[j], _fmt(freqs[j])) for j in range(len(names))],
    )
    prof = res.profile
    _write_rows(
        out / "profile.csv",
        ("lambda", "phi", "phi_sd", "q"),
        [
            (_fmt(prof.lambdas[g]), "" if np.isnan(prof.phi[g]) else _fmt(prof.phi[g]),
             "" if np.isnan(prof.phi_sd[g]) else _fmt(prof.phi_sd[g]), _fmt(prof.q[g]))
            for g in range(prof.lambdas.size)
        ],
    )
    chosen = select_variables(res.full_matrix(lam), pi_thr)
    g = res.lambda_index(lam)
    summary = {
        "pipeline": res.pipeline,
        "lambda": lam,
        "rule_used": res.tuning.rule_used,
        "lambda_stable": res.tuning.lambda_stable,
        "lambda_stable_1sd": res.tuning.lambda_stable_1sd,
        "phi": _jsonable(float(prof.phi[g])),
        "phi_sd": _jsonable(float(prof.phi_sd[g])),
        "pi_thr": pi_thr,
        "selected": [
            {"variable": int(j) + 1, "name": names[j], "frequency": float(freqs[j])}
            for j in sorted(chosen, key=lambda j: (-freqs[j], j))
        ],
    }
    _write_json(out / "selected.json", summary)
    return summary


def cmd_select(args) -> int:
    d = _load(args)
    out = _out_dir(args)
    res = select(d, args.pipeline, B=args.B, seed=args.seed, jobs=args.jobs, **_select_options(args))
    summary = _write_selection(out, res, d.column_names, args.pi_thr)
    _manifest(args, out, {"rule_used": summary["rule_used"]})
    log.info("%s: lambda %g (%s), %d selected", args.pipeline, summary["lambda"],
             summary["rule_used"], len(summary["selected"]))
    if res.tuning.rule_used == "stable_1sd":
        log.warning("no penalty reached stability 0.75; used the one-sd rule")
        return EXIT_FALLBACK
    return EXIT_OK


def _scenario(args):
    if args.scenario is None:
        raise UsageError("--scenario is required")
    try:
        cfg = load_scenario(args.scenario, desk=args.desk)
    except KeyError:
        raise UsageError(
            f"unknown scenario {args.scenario!r}; built-ins: {', '.join(PRESETS)} (or a JSON file path)"
        ) from None
    except FileNotFoundError:
        raise FileNotFoundError(f"scenario file not found: {args.scenario}") from None
    return with_overrides(cfg, seed=args.seed, B=args.B, dataset_count=args.datasets)


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args)
    pipelines = args.pipeline_list or ["raw", "decorrelated"]
    reports = run_experiments(cfg, pipelines, jobs=args.jobs, **_select_options(args))
    phi_rows, f1_rows, summary = [], [], {"scenario": cfg.name, "pipelines": {}}
    for name in pipelines:
        rep = reports[name]
        for r in rep.records:
            phi_rows.append((r.replicate, name, _fmt(r.lam), _fmt(r.phi), _fmt(r.phi_sd), _fmt(r.q)))
        mean_f1, sd_f1 = rep.mean_f1(), rep.sd_f1()
        for k, thr in enumerate(rep.pi_grid):
            f1_rows.append((_fmt(thr), name, _fmt(mean_f1[k]), _fmt(sd_f1[k])))
        summary["pipelines"][name] = {
            "mean_phi": _jsonable(rep.mean_phi()),
            "mean_f1": {str(t): _jsonable(float(v)) for t, v in zip(rep.pi_grid, mean_f1)},
            "replicates": len(rep.records),
            "failures": [{"replicate": i, "error": msg} for i, msg in rep.failures],
        }
    phi_rows.sort(key=lambda row: (row[0], pipelines.index(row[1])))
    _write_rows(out / "phi.csv", ("replicate", "pipeline", "lambda", "phi", "phi_sd", "q"), phi_rows)
    _write_rows(out / "f1.csv", ("pi_thr", "pipeline", "mean_f1", "sd_f1"), f1_rows)
    _write_json(out / "summary.json", summary)
    _write_json(out / "scenario.json", cfg.to_json())
    _manifest(args, out)
    for name in pipelines:
        print(f"{name}: mean phi {summary['pipelines'][name]['mean_phi']}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    d = _load(args)
    signal = [j - 1 for j in args.signal]
    if max(signal) >= d.p:
        raise UsageError(f"signal index {max(signal) + 1} exceeds the {d.p} predictors")
    design = d.X
    if args.decorrelate:
        design = gram_schmidt(d, args.gs_mode).Q
    report = irrepresentable_norm(design, signal).to_json()
    report["signal_set"] = [j + 1 for j in report["signal_set"]]
    report["noise_set"] = [j + 1 for j in report["noise_set"]]
    report["decorrelated"] = bool(args.decorrelate)
    try:
        report["condition_number"] = condition_number(np.corrcoef(d.X, rowvar=False))
    except NotPD:
        report["condition_number"] = None
    text = json.dumps(report, sort_keys=True)
    print(text)
    if args.out_dir is not None:  # diagnose prints to stdout and only writes files on request
        out = _out_dir(args)
        _write_json(out / "diagnose.json", report)
        _manifest(args, out)
    return EXIT_OK


def cmd_trace(args) -> int:
    if args.scenario is not None:
        cfg = _scenario(args)
        X, Y, _ = generate_dataset(cfg, args.replicate)
        d = standardize(X, Y)
        B, seed = cfg.B, cfg.seed
    else:
        d = _load(args)
        B, seed = args.B, args.seed
    out = _out_dir(args)
    res = select(d, args.pipeline, B=B, seed=seed, replicate=args.replicate, jobs=args.jobs,
                 **_select_options(args))
    lam = res.tuning.lam
    trace = convergence_trace(res.full_matrix(lam))
    rows = [(b, "" if np.isnan(phi) else _fmt(phi), "" if np.isnan(h) else _fmt(h)) for b, phi, h in trace]
    _write_rows(out / "trace.csv", ("b", "phi", "ci_halfwidth"), rows)
    _manifest(args, out, {"lambda": lam, "rule_used": res.tuning.rule_used})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="CSV file with a header row")
    common.add_argument("--response", default="y", help="name of the response column (default: y)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--B", type=_positive_int, default=100, help="number of half-samples")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    common.add_argument("--out-dir", default=None, help=f"output directory (default: {DEFAULT_OUT_DIR})")
    common.add_argument("--grid-count", type=_positive_int, default=100)
    common.add_argument("--grid-ratio", type=_ratio, default=None,
                        help="lambda_min / lambda_max (default 1e-2 if p > n else 1e-4)")
    common.add_argument("--pi-thr", type=_pi_thr, default=0.6)
    common.add_argument("--screen-threshold", type=_positive_int, default=DEFAULT_THRESHOLD)
    common.add_argument("--gs-mode", choices=("classical", "modified"), default="classical")
    common.add_argument("--pipeline", choices=PIPELINES, default=None,
                        help="variant to run (default: decorrelated; simulate runs raw and decorrelated)")
    common.add_argument("--scenario", help=f"built-in ({', '.join(PRESETS)}) or JSON path")

    parser = argparse.ArgumentParser(
        prog="decorr",
        description="Stability selection with Gram-Schmidt decorrelated predictors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[common], help="rank predictors by adaptive Ridge-HOLP")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("decorrelate", parents=[common], help="reorder and orthonormalize the design")
    p.add_argument("--dump-qr", action="store_true", help="also write Q.csv and R.csv")
    p.set_defaults(func=cmd_decorrelate)

    p = sub.add_parser("select", parents=[common], help="stability selection on a CSV dataset")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", parents=[common], help="run a synthetic benchmark scenario")
    p.add_argument("--compare", dest="pipeline_list", action="append", choices=PIPELINES,
                   help="pipeline variant to run; repeat for several (default: raw and decorrelated)")
    p.add_argument("--datasets", type=_positive_int, default=None, help="override the replicate count")
    p.add_argument("--desk", action="store_true", help="use the reduced p = 100, 20-dataset presets")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", parents=[common], help="irrepresentable-condition report as JSON")
    p.add_argument("--signal", type=_index_list, required=True, help="1-based signal columns, e.g. 1,3")
    p.add_argument("--decorrelate", action="store_true", help="evaluate on Q instead of X")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("trace", parents=[common], help="stability as a function of the number of half-samples")
    p.add_argument("--replicate", type=int, default=0, help="replicate index for --scenario")
    p.add_argument("--desk", action="store_true")
    p.add_argument("--datasets", type=_positive_int, default=None)
    p.set_defaults(func=cmd_trace)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("DECORR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        if args.pipeline_list is None and args.pipeline is not None:
            args.pipeline_list = [args.pipeline]
    elif args.pipeline is None:
        args.pipeline = "decorrelated"
    try:
        return args.func(args)
    except (DecorrError, UsageError, FileNotFoundError, ValueError, KeyError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc).strip("'\"")}
        print(json.dumps(err), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
