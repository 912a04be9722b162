"""Command-line front end: ``simulate``, ``limit`` and ``check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, limitlaw
from .config import (
    ConfigError,
    config_to_text,
    load_config,
    parse_config,
    parse_model_spec,
    parse_p_spec,
    parse_p_distribution,
    parse_pairs,
    parse_quad,
)
from .dependence import condition_report
from .engine import GenerationError, run_experiment
from .genpath import PATH_STREAM, generate_path, replicate_rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_IO = 4

log = logging.getLogger("maxminlab")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_simulate(args) -> int:
    started = _now()
    overrides = {"n": args.n, "reps": args.reps, "seed": args.seed, "workers": args.workers}
    try:
        cfg = load_config(args.config, overrides)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config file {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run_experiment(cfg)
    except GenerationError as exc:
        params = ", ".join(f"{k}={v}" for k, v in cfg.correlation.params().items())
        print(
            f"error: path generation failed for correlation {cfg.correlation.kind}({params}) "
            f"at n={cfg.n}: {exc}",
            file=sys.stderr,
        )
        return EXIT_GENERATION

    out = Path(args.out)
    outputs = {"estimates": str(out / "estimates.csv"), "manifest": str(out / "manifest.json")}
    try:
        _write(out / "estimates.csv", result.estimates_csv())
        if args.dump_raw:
            outputs["raw"] = str(out / "raw.csv")
            _write(out / "raw.csv", result.raw_csv())
            path = generate_path(cfg.correlation, cfg.n, replicate_rng(cfg.base_seed, 0, PATH_STREAM), cfg.sampler)
            outputs["path_0"] = str(out / "path_0.csv")
            _write(out / "path_0.csv", "".join(f"{v!r}\n" for v in path.values.tolist()))
        manifest = {
            "version": __version__,
            "base_seed": cfg.base_seed,
            "config": config_to_text(cfg),
            "p_distribution": {"kind": result.p_distribution.kind, **result.p_distribution.params()},
            "s_n_zero_count": result.sample.empty_count,
            "reps": cfg.reps,
            "wall_time_s": round(result.wall_time, 3),
            "started": started,
            "finished": _now(),
            "outputs": outputs,
        }
        _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(result.estimates_csv(), end="")
    return EXIT_OK


def load_manifest(path):
    """Rebuild the ExperimentConfig recorded in a manifest."""
    data = json.loads(Path(path).read_text())
    return parse_config(data["config"], str(path))


def cmd_limit(args) -> int:
    pd = None
    quads = []
    try:
        if args.config:
            values, quad_lines = parse_pairs(Path(args.config).read_text(), args.config)
            pd = parse_p_distribution(values)
            quads += [parse_quad(v, f"{args.config}:{ln}: quad") for ln, v in quad_lines]
        if args.p_dist:
            pd = parse_p_spec(args.p_dist)
        for i, text in enumerate(args.quad or [], 1):
            quads.append(parse_quad(text, f"quad #{i}"))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    if pd is None:
        pd = parse_p_spec("point:1")
    text = limitlaw.limit_grid_csv(limitlaw.gumbel(), quads, pd)
    return _emit(text, args.out)


def _emit(text: str, out) -> int:
    if out:
        try:
            _write(Path(out), text)
        except OSError as exc:
            print(f"error: cannot write {out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        model = parse_model_spec(args.model)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.p > 1:
        print(f"error: p: need p > 1, got {args.p}", file=sys.stderr)
        return EXIT_CONFIG
    report = condition_report(model, p=args.p, x=args.x, y=args.y, n_max=args.n_max,
                              dprime_n_max=args.dprime_n_max)
    return _emit(report.to_csv(), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxminlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    sim.add_argument("--config", required=True, metavar="PATH")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--out", default="out", metavar="DIR")
    sim.add_argument("--dump-raw", action="store_true", help="also write raw extremes and one sample path")
    sim.set_defaults(func=cmd_simulate)

    lim = sub.add_parser("limit", help="evaluate the limit law on threshold quads")
    lim.add_argument("--config", metavar="PATH", help="read p_distribution.* and quad lines from a config file")
    lim.add_argument("--p-dist", metavar="SPEC", help="point:p | uniform:a,b | beta:a,b | discrete:v:w,...")
    lim.add_argument("--quad", action="append", metavar="X2,Y2,X1,Y1")
    lim.add_argument("--out", metavar="FILE")
    lim.set_defaults(func=cmd_limit)

    chk = sub.add_parser("check", help="dependence-condition diagnostics for a correlation model")
    chk.add_argument("--model", required=True, metavar="SPEC", help="iid | ar1:phi | power:c,alpha | log:c")
    chk.add_argument("--p", type=float, default=2.0, help="exponent of the summability check")
    chk.add_argument("--x", type=float, default=0.0)
    chk.add_argument("--y", type=float, default=0.0)
    chk.add_argument("--n-max", type=int, default=10**6)
    chk.add_argument("--dprime-n-max", type=int, default=10**5)
    chk.add_argument("--out", metavar="FILE")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
