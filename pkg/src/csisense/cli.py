"""Command-line entry point: ``csisense {plan,simulate,parse,features,evaluate,pipeline}``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import pipeline, store
from .config import ConfigError, PipelineConfig
from .core import TraceMeta
from .fresnel import build_lookup_table, recommend_odd_zone
from .ingest import ParseError, read_log, write_trace

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return cfg.with_overrides(**overrides) if overrides else cfg


def cmd_plan(args) -> int:
    cfg = PipelineConfig.load(args.config) if args.config else None
    wavelength = args.wavelength if args.wavelength is not None else (
        cfg.raw["geometry"]["wavelength"] if cfg else 0.06)
    separation = args.separation if args.separation is not None else (
        cfg.raw["geometry"]["separation"] if cfg else 1.2)
    if not wavelength > 0 or not separation > 0:
        raise UsageError("wavelength and separation must be positive")
    if args.n_max < 0:
        raise UsageError("--n-max must be non-negative")
    table = build_lookup_table(wavelength, separation, args.n_max)
    text = table.to_csv() if args.format == "csv" else table.format()
    if args.target is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rec = recommend_odd_zone(args.target, wavelength, separation, max(args.n_max, 1))
        for w in caught:
            print(f"csisense: warning: {w.message}", file=sys.stderr)
        text += (f"# target {args.target:g} m: containing zone {rec.containing_zone}, "
                 f"nearest odd zone {rec.n_odd} at {rec.boundary_distance:.6f} m\n")
    _emit(text, args.out)
    return EXIT_OK


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    root = Path(args.out) if args.out else cfg.dataset_dir
    rows = store.write_dataset(root, pipeline.simulate(cfg))
    print(f"wrote {len(rows)} traces to {root}")
    return EXIT_OK


def cmd_parse(args) -> int:
    meta = TraceMeta(args.subject or "", args.label or "", args.session or "")
    trace = read_log(args.log, strict=args.strict, meta=meta)
    out = Path(args.out) if args.out else Path(args.log).with_suffix(".trace")
    write_trace(trace, out, decimals=None)
    print(f"decoded {len(trace)} frames to {out}")
    return EXIT_OK


def _dataset_root(args, cfg) -> Path:
    return Path(args.dataset) if args.dataset else cfg.dataset_dir


def cmd_features(args) -> int:
    cfg = _config(args)
    root = _dataset_root(args, cfg)
    ds = pipeline.store_features(root, cfg)
    print(f"features: {len(ds)} traces x {len(ds.layout)} values in {root / store.FEATURES}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    if args.protocol:
        cfg = cfg.with_overrides(protocols={"names": args.protocol})
    ds = pipeline.store_features(_dataset_root(args, cfg), cfg)
    reports = pipeline.evaluate(ds, cfg)
    pipeline.write_reports(reports, args.out or cfg.output_dir)
    sys.stdout.write(pipeline.format_reports(reports))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    reports = pipeline.run_pipeline(cfg, args.out)
    sys.stdout.write(pipeline.format_reports(reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: $CSISENSE_CONFIG, else built-in defaults)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output path or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="csisense", description="WiFi CSI gesture sensing pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", parents=[common], help="print the Fresnel boundary look-up table")
    sp.add_argument("--wavelength", type=float)
    sp.add_argument("--separation", "-l", type=float, help="Tx-Rx distance in metres")
    sp.add_argument("--n-max", type=int, default=10)
    sp.add_argument("--target", type=float, help="subject distance from the link midpoint, metres")
    sp.add_argument("--format", choices=("text", "csv"), default="text")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", parents=[common], help="generate a synthetic gesture dataset")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("parse", parents=[common], help="decode an Intel 5300 CSI log to a text trace")
    sp.add_argument("log")
    sp.add_argument("--strict", action="store_true", help="fail on malformed or truncated records")
    sp.add_argument("--subject")
    sp.add_argument("--label")
    sp.add_argument("--session")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("features", parents=[common], help="compute (or refresh) the feature cache")
    sp.add_argument("dataset", nargs="?")
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("evaluate", parents=[common], help="run evaluation protocols on a dataset")
    sp.add_argument("dataset", nargs="?")
    sp.add_argument("--protocol", action="append")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("pipeline", parents=[common], help="simulate/load, featurize and evaluate end to end")
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, store.StoreError, ParseError, FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"csisense: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic, non-zero exit
        print(f"csisense: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
