"""Command-line entry point: ``fourierident {simulate,identify,ensemble,plotdata}``."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import FourierIdentError, InvalidDataError, InvalidParameterError, ParseError
from .experiments import (
    BOXPLOT_FIELDS,
    DECAY_FIELDS,
    ENERGY_FIELDS,
    boxplot_rows,
    decay_rows,
    energy_rows,
    read_rows,
    result_json,
    run_ensemble,
    run_identify,
    summarize,
    write_rows,
)
from .grid import NoiseSpec, add_noise
from .io import infer_format, load_trajectory, save_trajectory
from .metrics import load_truth, save_truth
from .pipeline import RunConfig, StageError
from .simulate import EQUATIONS, DEFAULT_IC, benchmark_spec, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IDENTIFY = 3

_INPUT_ERRORS = (ParseError, InvalidParameterError, InvalidDataError, OSError)

log = logging.getLogger("fourierident")


def read_config(path) -> dict:
    """Flat ``key = value`` (or ``key: value``) file; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ParseError(f"config file {path}: {exc}") from exc
    return dict(parser["run"])


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ParseError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(args) -> RunConfig:
    mapping = read_config(args.config) if getattr(args, "config", None) else {}
    mapping.update(parse_overrides(getattr(args, "set", None)))
    try:
        return RunConfig.from_mapping(mapping)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FourierIdentError):
            raise
        raise ParseError(f"bad config value: {exc}") from exc


def parse_nsr_list(text: str):
    try:
        values = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ParseError(f"bad noise list {text!r}") from exc
    if not values:
        raise ParseError("empty noise list")
    return values


def truth_path_for(out: Path) -> Path:
    return out.with_name(out.stem + ".truth.json")


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    ic = DEFAULT_IC[args.eq]
    if args.modes is not None:
        ic = replace(ic, modes=args.modes)
    if args.amplitude is not None:
        ic = replace(ic, amplitude=args.amplitude)
    spec = benchmark_spec(args.eq, ic)
    if args.nt is not None:
        spec = replace(spec, domain=spec.domain.with_n_t(args.nt))
    traj = add_noise(simulate(spec), NoiseSpec(args.nsr, args.seed))
    out = Path(args.out)
    save_trajectory(traj, out, args.format or infer_format(out))
    save_truth(spec.coefficients, truth_path_for(out))
    log.info("wrote %s and %s", out, truth_path_for(out))
    return EXIT_OK


def cmd_identify(args) -> int:
    config = load_config(args)
    truth = load_truth(args.truth) if args.truth else None
    traj = load_trajectory(args.input)
    result, metrics = run_identify(traj, config, truth)
    _write_text(args.out, result_json(result, metrics, config))
    log.info("%s", result.equation())
    return EXIT_OK


def cmd_ensemble(args) -> int:
    config = load_config(args)
    if args.seeds < 1:
        raise ParseError("--seeds must be at least 1")
    seeds = range(config.seed, config.seed + args.seeds)
    rows = run_ensemble(args.eq, parse_nsr_list(args.nsr), seeds, config, workers=args.workers)
    write_rows(rows, args.out)
    for s in summarize(rows):
        log.info("%s nsr=%g exact=%.2f median e2=%.4g mean TPR=%.2f PPV=%.2f failed=%d",
                 s.equation, s.nsr, s.exact, s.e2_median, s.tpr_mean, s.ppv_mean, s.failed)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    if args.which == "boxplot":
        write_rows(boxplot_rows(read_rows(args.input)), args.out, BOXPLOT_FIELDS)
        return EXIT_OK
    config = load_config(args)
    traj = load_trajectory(args.input)
    if args.which == "decay":
        write_rows(decay_rows(traj, config), args.out, DECAY_FIELDS)
    else:
        result, _ = run_identify(traj, config)
        write_rows(energy_rows(result), args.out, ENERGY_FIELDS)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fourierident", description="PDE identification in the frequency domain")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--config", help="flat key = value file with RunConfig fields")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    s = sub.add_parser("simulate", help="simulate a benchmark and add noise")
    s.add_argument("--eq", required=True, choices=EQUATIONS)
    s.add_argument("--nsr", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--modes", type=int, help="number of initial modes R")
    s.add_argument("--amplitude", type=float)
    s.add_argument("--nt", type=int, help="number of time samples")
    s.add_argument("--format", choices=("csv", "binary"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("identify", help="identify a PDE from a trajectory file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--truth", help="truth JSON for metrics")
    config_args(s)
    s.add_argument("--out", help="result JSON (stdout when omitted)")
    s.set_defaults(func=cmd_identify)

    s = sub.add_parser("ensemble", help="repeat identification over noise levels and seeds")
    s.add_argument("--eq", required=True, choices=EQUATIONS)
    s.add_argument("--nsr", required=True, help="comma-separated noise levels")
    s.add_argument("--seeds", type=int, required=True, help="seeds run from config seed upward")
    s.add_argument("--workers", type=int, default=1)
    config_args(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("plotdata", help="emit CSV series for figures")
    s.add_argument("--which", required=True, choices=("decay", "energy", "boxplot"))
    s.add_argument("--in", dest="input", required=True, help="trajectory, or ensemble CSV for boxplot")
    config_args(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.stage == "load" or isinstance(exc.cause, _INPUT_ERRORS):
            return EXIT_CONFIG
        return EXIT_IDENTIFY
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FourierIdentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IDENTIFY


if __name__ == "__main__":
    sys.exit(main())
