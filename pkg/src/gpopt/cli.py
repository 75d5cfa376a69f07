"""Command line: ``gpopt doe | run | report``.

Exit codes: 0 success, 2 configuration/argument error, 3 objective
evaluation error. ``GPOPT_OUTPUT_DIR`` sets where outputs go when ``--out``
is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from gpopt import __version__
from gpopt.acquisition import AcquisitionSpec
from gpopt.bo import BOConfig, bayesian_optimize, incumbent
from gpopt.design import design_to_unit, min_distance, scale_design, tplhd
from gpopt.domain import Domain
from gpopt.errors import ConfigurationError, EvaluationError
from gpopt.report import ParseError, fmt, read_run_csv, render_report, write_run_csv
from gpopt.problems import PROBLEMS, get_problem

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATION = 3
OUTPUT_DIR_ENV = "GPOPT_OUTPUT_DIR"


def _default_path(name: str) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / name


def parse_bounds(text: str) -> list[tuple[float, float]]:
    bounds = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            bounds.append((float(lo), float(hi)))
        except ValueError:
            raise ConfigurationError(f"bad bounds entry {part!r}; expected lower:upper") from None
    return bounds


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_doe(args) -> int:
    if args.n < 1 or args.dim < 1:
        raise ConfigurationError("--n and --dim must be positive")
    bounds = parse_bounds(args.bounds) if args.bounds else [(0.0, 1.0)] * args.dim
    if len(bounds) != args.dim:
        raise ConfigurationError(f"--bounds lists {len(bounds)} ranges but --dim is {args.dim}")
    try:
        domain = Domain.from_bounds(bounds)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    levels = tplhd(args.n, args.dim)
    X = scale_design(levels, domain)
    lines = [",".join(domain.names)] + [",".join(fmt(v) for v in row) for row in X]
    out = Path(args.out) if args.out else _default_path(f"doe_n{args.n}_d{args.dim}.csv")
    _write_text(out, "\n".join(lines) + "\n")
    if args.n >= 2:
        print(f"min_distance: {fmt(min_distance(design_to_unit(levels)))}")
    else:
        print("min_distance: n/a (single point)")
    print(f"wrote {len(X)} points to {out}")
    return EXIT_OK


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return data


def build_config(args, problem) -> BOConfig:
    data = _load_config(args.config)
    acq = dict(data.get("acquisition") or {})
    if args.acquisition:
        acq["kind"] = args.acquisition
    if args.beta is not None:
        acq["beta"] = args.beta
    acq.setdefault("kind", "EI")
    if problem.reference is not None and acq.get("reference") is None and str(acq["kind"]).lower() == "hvpoi":
        acq["reference"] = list(problem.reference)
    data["acquisition"] = acq
    for flag, key in (
        ("budget", "budget"),
        ("init", "initial_design_size"),
        ("seed", "seed"),
        ("kernel", "kernel"),
        ("restarts", "restarts"),
    ):
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if args.clip_nonfinite:
        data["clip_nonfinite"] = True
    if args.hmc:
        data["hmc"] = data.get("hmc") or {}
    return BOConfig.from_dict(data)


def _summary(history, problem, threshold) -> str:
    if problem.n_objectives == 1:
        inc = incumbent(history, threshold)
        if not inc.feasible:
            return "final incumbent: none feasible"
        x = ", ".join(fmt(v) for v in inc.x)
        return f"final incumbent: {fmt(inc.y[0])} at x = [{x}]"
    return f"final feasible-front hypervolume: {fmt(history.incumbents[-1])}"


def cmd_run(args) -> int:
    problem = get_problem(args.problem)
    config = build_config(args, problem)
    out = Path(args.out) if args.out else _default_path(
        f"run_{problem.name}_{config.acquisition.kind.lower()}_s{config.seed}.csv"
    )
    meta = {
        "gpopt": __version__,
        "problem": problem.name,
        "senses": list(problem.objective.senses),
        "config": config.to_dict(),
    }
    try:
        history = bayesian_optimize(problem.objective, problem.domain, config)
    except EvaluationError as exc:
        if exc.history is not None:
            meta["aborted"] = str(exc)
            _write_history(out, exc.history, meta, args.record_time)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION
    _write_history(out, history, meta, args.record_time)
    print(_summary(history, problem, config.acquisition.pof_threshold))
    print(f"wrote {len(history)} evaluations to {out}")
    return EXIT_OK


def _write_history(path: Path, history, meta, record_time) -> None:
    import io

    buf = io.StringIO()
    write_run_csv(buf, history, meta, record_time)
    _write_text(path, buf.getvalue())


def cmd_report(args) -> int:
    table = read_run_csv(args.input)
    svg = render_report(table)
    out = Path(args.out) if args.out else _default_path(Path(args.input).with_suffix(".svg").name)
    _write_text(out, svg)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpopt", description="Gaussian-process Bayesian optimization")
    parser.add_argument("--version", action="version", version=f"gpopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    doe = sub.add_parser("doe", help="write a maximin Latin hypercube design as CSV")
    doe.add_argument("--n", type=int, required=True, help="number of points")
    doe.add_argument("--dim", type=int, required=True, help="number of dimensions")
    doe.add_argument("--bounds", help="lower:upper per dimension, comma separated (default 0:1)")
    doe.add_argument("--out", help="output CSV path")
    doe.set_defaults(func=cmd_doe)

    run = sub.add_parser("run", help="run Bayesian optimization on a built-in problem")
    run.add_argument("--problem", required=True, help=f"one of: {', '.join(sorted(PROBLEMS))}")
    run.add_argument("--acquisition", help="ei, poi, lcb, mes, hvpoi or pof")
    run.add_argument("--budget", type=int, help="BO iterations after the initial design")
    run.add_argument("--init", type=int, help="initial design size")
    run.add_argument("--seed", type=int)
    run.add_argument("--config", help="JSON config file (flags override it)")
    run.add_argument("--out", help="output CSV path")
    run.add_argument("--kernel", help="matern52 or se")
    run.add_argument("--restarts", type=int, help="hyperparameter optimization restarts")
    run.add_argument("--beta", type=float, help="LCB exploration weight")
    run.add_argument("--hmc", action="store_true", help="marginalize hyperparameters with HMC")
    run.add_argument("--clip-nonfinite", action="store_true", help="replace NaN/inf outputs with the worst value seen")
    run.add_argument(
        "--record-time", action="store_true", help="fill elapsed_seconds (output is then not reproducible)"
    )
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="render a run CSV as SVG")
    report.add_argument("input", help="run CSV")
    report.add_argument("--out", help="output SVG path")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
