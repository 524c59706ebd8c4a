"""Command-line entry point: ``roadghg {train,predict,evaluate,speed,synth}``.

Every config key is also a flag (``hidden_layers`` -> ``--hidden-layers``);
flags override the config file.

Exit codes: 0 success, 1 other error, 2 validation error, 3 speed
estimation failure, 4 test-year leakage.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import metrics, pipeline
from .errors import LeakageError, RoadGHGError, SpeedUnavailableError, ValidationError
from .synth import build_fixture

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_SPEED, EXIT_LEAKAGE = 0, 1, 2, 3, 4

log = logging.getLogger("roadghg")
_CHOICES = {"speed_source": ("historical", "estimated"), "historical_speed_mode": ("interval", "daily")}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=argparse.SUPPRESS, help="flat JSON config file")
    for f in fields(pipeline.RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if "bool" in str(f.type):
            parser.add_argument(flag, dest=f.name, action="store_true", default=argparse.SUPPRESS)
        elif f.name in _CHOICES:
            parser.add_argument(flag, dest=f.name, choices=_CHOICES[f.name], default=argparse.SUPPRESS)
        else:
            parser.add_argument(flag, dest=f.name, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadghg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    _add_config_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("train", "train per-site AADT networks"),
        ("predict", "detections -> counts -> AADT -> emissions"),
        ("evaluate", "score predictions against ground truth"),
        ("speed", "estimate live speeds from dual-band rasters"),
        ("synth", "write a synthetic end-to-end fixture"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        _add_config_flags(p)
        if name == "synth":
            p.add_argument("--days", type=int, default=60, help="training days of 2017 history")
    return parser


def cmd_train(cfg) -> int:
    result = pipeline.run_train(cfg)
    for site, reason in result.skipped.items():
        print(f"skipped {site}: {reason}")
    for (site, road_type), tlog in result.logs.items():
        print(f"{site} {road_type.value}: best epoch {tlog.best_epoch}/{tlog.stopped_epoch}, "
              f"validation MAPE {tlog.final_val_mape:.4f}")
    print(f"wrote {len(result.weights_paths)} weights file(s) to {cfg.weights_dir}")
    return EXIT_OK


def cmd_predict(cfg) -> int:
    result = pipeline.run_predict(cfg)
    for r in result.directions:
        print(f"{r.stem}: speed {r.speed_kmh:.1f} km/h ({r.speed_source}), "
              f"{r.count_record.total:.1f} vehicles/15min")
    print(result.paths["emissions_table"].read_text(), end="")
    print(f"outputs in {cfg.output_dir}")
    return EXIT_OK


def cmd_evaluate(cfg) -> int:
    results, paths = pipeline.run_evaluate(cfg)
    cols = ["label", "group", "rmse", "mape"]
    if results.count_pairs:
        print("15-minute counts")
        print(metrics.format_table(metrics.count_table(results.count_pairs), ["label", "rmse", "mape"]))
    print("\nLA AADT")
    print(metrics.format_table(metrics.aadt_table(results.la_results), cols))
    print("\nLA GHG emissions (kg CO2e/yr)")
    print(metrics.format_table(metrics.ghg_table(results.la_results), cols))
    print(f"\nreport files in {Path(cfg.output_dir) / 'evaluation'}")
    return EXIT_OK


def cmd_speed(cfg) -> int:
    rows, path = pipeline.run_speed(cfg)
    for stem, est in rows:
        speed = "no pairs" if est.failed else f"{est.mean_speed_kmh:.1f} km/h"
        print(f"{stem}: {est.status} {speed} (bright {est.n_bright}, dark {est.n_dark}, pairs {est.pair_count})")
    print(f"wrote {path}")
    return EXIT_SPEED if any(est.failed for _, est in rows) else EXIT_OK


def cmd_synth(cfg, days: int) -> int:
    path = build_fixture(cfg.output_dir, seed=cfg.seed, days=days)
    print(f"fixture written; run e.g. 'roadghg train --config {path}'")
    return EXIT_OK


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    logging.basicConfig(level=logging.DEBUG if args.pop("verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    days = args.pop("days", 60)
    config_path = args.pop("config", None)
    try:
        cfg = pipeline.load_config(config_path, args)
        if command == "synth":
            return cmd_synth(cfg, days)
        return {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate, "speed": cmd_speed}[command](cfg)
    except LeakageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LEAKAGE
    except SpeedUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEED
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RoadGHGError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
