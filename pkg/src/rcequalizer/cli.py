"""Command-line entry point.

::

    rcequalizer run config.yaml --out results/run1
    rcequalizer scan scan.yaml --workers 4
    rcequalizer preset fig4 --masks 5
    rcequalizer list-presets
"""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import emit
from .harness.config import ConfigError, ExperimentConfig, dump, load, validate
from .harness.presets import PRESET_NAMES, preset
from .harness.runner import run_cell, run_scan

log = logging.getLogger("rcequalizer")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--fixed", action="store_true", help="use the bit-accurate fixed-point readout")
    p.add_argument("--paper-scale", action="store_true", help="10^6-symbol test phase instead of desk scale")
    p.add_argument("--masks", type=int, help="number of random input masks per cell")
    p.add_argument("--workers", type=int, help="concurrent scan cells")
    p.add_argument("--dump-config", action="store_true", help="print the effective config as YAML and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcequalizer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one configuration (all its masks)")
    p.add_argument("config")
    _common(p)
    p = sub.add_parser("scan", help="run the scan grids of a configuration")
    p.add_argument("config")
    _common(p)
    p = sub.add_parser("preset", help="run a named figure preset")
    p.add_argument("name")
    _common(p)
    sub.add_parser("list-presets", help="list available presets")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    if args.fixed:
        cfg.run.pipeline = "fixed"
    if args.paper_scale:
        cfg.run.paper_scale = True
    if args.masks is not None:
        cfg.run.masks = args.masks
    if args.workers is not None:
        cfg.run.workers = args.workers
    return validate(cfg)


def _report(results) -> None:
    for r in results:
        cell = " ".join(f"{k}={v}" for k, v in r.cell.items())
        flag = "  *best*" if r.best else ""
        print(f"{cell or r.name}: mean SER {r.mean_ser:.3e} (min {r.min_ser:.3e}, max {r.max_ser:.3e}){flag}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list-presets":
        for name in PRESET_NAMES:
            print(name)
        return 0
    try:
        if args.command == "preset":
            cfg = preset(args.name)
        else:
            cfg = load(args.config)
        cfg = _apply_overrides(cfg, args)
        if args.command == "scan" and not (cfg.scan or cfg.variants):
            raise ConfigError("scan", "no scan grids or variants to run")
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc.args[0] if isinstance(exc, KeyError) else exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(dump(cfg))
        return 0
    if args.command == "run" or not (cfg.scan or cfg.variants):
        results = [run_cell(cfg)]
    else:
        results = run_scan(cfg)
    try:
        paths = emit.emit_results(cfg, results, cfg.output_dir)
    except OSError as exc:
        print(f"error: cannot write results to {cfg.output_dir}: {exc}", file=sys.stderr)
        return 1
    _report(results)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
