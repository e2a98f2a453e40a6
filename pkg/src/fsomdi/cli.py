"""Command-line entry point.

Subcommands
-----------
point     evaluate one link configuration
sweep     evaluate a grid and emit CSV/JSON figure data
decoy     one point with decoy-state estimation switched on
validate  compare closed forms against the Monte Carlo oracle
presets   list the named weather, AO and decoy parameter sets

Exit codes: 0 ok, 1 input error, 2 numerical failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

from . import pipeline, presets
from .errors import InputDomainError, NumericalError
from .pipeline import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, LinkConfig, SweepSpec


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in pipeline._float_list(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from exc


def _names(text: str) -> tuple[str, ...]:
    return tuple(v for v in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [geometry], [turbulence], [ao], [detection], [decoy], [sweep]")
    common.add_argument("--weather", help="clear, overcast or hazy (comma list for sweep)")
    common.add_argument("--ao", help="none, mild, medium or strong (comma list for sweep)")
    common.add_argument("--aperture-m", help="receiver radius in m (list for sweep)")
    common.add_argument("--distance-km", help="path length in km (list or lo:hi:step for sweep)")
    common.add_argument("--elevation-deg", help="elevation angle in degrees (list for sweep)")
    common.add_argument("--kappa", type=float, help="axis concentration (default 1)")
    common.add_argument("--decoy", action="store_true", help="also run decoy-state estimation")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo samples for validate")
    common.add_argument("--workers", type=int, default=1)

    parser = argparse.ArgumentParser(prog="fsomdi", description="Turbulent free-space MDI-QKD link model")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("point", "evaluate one configuration"), ("sweep", "evaluate a parameter grid"),
                       ("decoy", "one point with decoy estimation"), ("validate", "closed form vs Monte Carlo"),
                       ("presets", "list named presets")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _single(value: str | None, cast, label: str):
    if value is None:
        return None
    items = pipeline._float_list(value) if cast is float else _names(value)
    if len(items) != 1:
        raise InputDomainError(f"{label} takes a single value for this subcommand")
    return cast(items[0])


def _link_config(args) -> tuple[LinkConfig, dict]:
    cfg, sweep = pipeline.read_config(args.config) if args.config else (LinkConfig(), {})
    overrides = {
        "distance_km": _single(args.distance_km, float, "--distance-km"),
        "aperture_m": _single(args.aperture_m, float, "--aperture-m"),
        "elevation_deg": _single(args.elevation_deg, float, "--elevation-deg"),
        "weather": _single(args.weather, str, "--weather"),
        "ao": _single(args.ao, str, "--ao"),
        "kappa": args.kappa,
    }
    if args.decoy:
        overrides["decoy"] = True
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None}), sweep


def _sweep_spec(args) -> SweepSpec:
    cfg, axes = pipeline.read_config(args.config) if args.config else (LinkConfig(), {})
    if args.kappa is not None:
        cfg = replace(cfg, kappa=args.kappa)

    def axis(flag, key, default, parse):
        if flag is not None:
            return parse(flag)
        return tuple(axes.get(key, default))

    return SweepSpec(
        distances_km=axis(args.distance_km, "distances_km", (cfg.distance_km,), _floats),
        apertures_m=axis(args.aperture_m, "apertures_m", (cfg.aperture_m,), _floats),
        weathers=axis(args.weather, "weathers", (cfg.weather,), _names),
        elevations_deg=axis(args.elevation_deg, "elevations_deg", (cfg.elevation_deg,), _floats),
        ao_names=axis(args.ao, "ao", (cfg.ao,), _names),
        decoy=args.decoy or cfg.decoy, kappa=cfg.kappa, seed=args.seed, base=cfg,
    )


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _run(args) -> int:
    if args.command == "presets":
        listing = {
            "weather": {k: asdict(v) for k, v in presets.WEATHER.items()},
            "weather_aliases": presets.WEATHER_ALIASES,
            "ao": {k: asdict(v) for k, v in presets.AO.items()},
            "decoy": {k: asdict(v) for k, v in presets.DECOY.items()},
        }
        _write(json.dumps(listing, indent=1), args.out)
        return EXIT_OK
    if args.command in ("point", "decoy"):
        cfg, _ = _link_config(args)
        if args.command == "decoy":
            cfg = replace(cfg, decoy=True)
        _write(pipeline.emit([pipeline.run_point(cfg)], args.format), args.out)
        return EXIT_OK
    if args.command == "sweep":
        rows = pipeline.run_sweep(_sweep_spec(args), workers=args.workers)
        _write(pipeline.emit(rows, args.format), args.out)
        return EXIT_OK
    if args.command == "validate":
        cfg, _ = _link_config(args)
        report, code = pipeline.validate(cfg, args.samples, args.seed, args.workers)
        _write(json.dumps(report, indent=1, default=str), args.out)
        return code
    raise InputDomainError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except InputDomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
