"""Command-line interface: ``phaseid simulate|identify|bench|sweep``.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal error.  ``PHASEID_LOG_LEVEL`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bench import SWEEP_PARAMETERS, Scenario, accuracy, merge_reports, run_scenario, sweep
from .ensemble import EnsembleConfig, bagging_assign, boosting_assign
from .identify import PreconditionError, kmeans_assign, mlp_assign, mlv_assign
from .io import (CampaignParseError, CampaignValidationError, load_campaign, save_assignments,
                 save_campaign, save_report)
from .metrology import METER_CLASSES, MeterClass, NoiseContext, inject_noise
from .model import METHOD_TAGS
from .simfeeder import PRESETS, FeederSpec, build_feeder, generate_campaign

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _choice(kind, valid):
    def parse(value):
        if value not in valid:
            raise argparse.ArgumentTypeError(f"unknown {kind} {value!r}; valid: {', '.join(valid)}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phaseid", description="Phase identification of LV customers from smart-meter data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a labelled synthetic campaign bundle")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", type=_choice("preset", list(PRESETS)))
    src.add_argument("--spec", type=Path, help="feeder spec JSON")
    s.add_argument("--days", type=float, default=20.0)
    s.add_argument("--resolution", type=float, default=15.0, help="minutes")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-reference", action="store_true", help="omit the three-phase reference customer")
    s.add_argument("--out", type=Path, required=True)

    i = sub.add_parser("identify", help="assign phases for a campaign bundle")
    i.add_argument("--campaign", type=Path, required=True)
    i.add_argument("--method", type=_choice("method", METHOD_TAGS), required=True)
    i.add_argument("--class", dest="meter_class", type=_choice("class", list(METER_CLASSES)),
                   help="inject noise of this accuracy class first")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--run", type=int, default=0, help="noise run index")
    i.add_argument("--m", type=int, default=None, help="salient component count")
    i.add_argument("--threshold", type=float, default=0.2, help="boosting threshold coefficient")
    i.add_argument("--out", type=Path, required=True)

    for name, help_ in (("bench", "run a Monte Carlo scenario"), ("sweep", "sweep one scenario parameter")):
        b = sub.add_parser(name, help=help_)
        b.add_argument("--config", type=Path, required=True)
        b.add_argument("--out", type=Path, required=True)
        b.add_argument("--workers", type=int, default=None, help="override the config's worker count")
        if name == "sweep":
            b.add_argument("--param", type=_choice("parameter", [*SWEEP_PARAMETERS, "class"]), required=True)
            b.add_argument("--values", required=True, help="comma-separated values")
    return p


def _simulate(args) -> int:
    if args.preset:
        feeder = build_feeder(args.preset, args.seed, days=args.days, resolution=args.resolution,
                              include_reference_customer=not args.no_reference)
    else:
        feeder = FeederSpec.from_dict(json.loads(args.spec.read_text()))
    c = generate_campaign(feeder, args.seed)
    save_campaign(c, args.out)
    (args.out / "feeder.json").write_text(json.dumps(feeder.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {c.N} customers x {c.T} samples to {args.out}")
    return EXIT_OK


def _identify(args) -> int:
    c = load_campaign(args.campaign)
    if args.meter_class:
        ctx = NoiseContext(U_n=c.nominal_voltage, P_n=c.nominal_power, seed=args.seed, run_index=args.run)
        c = inject_noise(c, MeterClass.from_name(args.meter_class), ctx)
    cfg = EnsembleConfig(args.threshold, args.m)
    method = args.method
    if method == "mlv-transfo":
        pred = mlv_assign(c, "transformer")
    elif method == "mlv-customer":
        pred = mlv_assign(c, "customer")
    elif method == "kmeans":
        _, pred, mode = kmeans_assign(c, seed=args.seed)
        if mode != "reference":
            print(f"cluster labelling: {mode}")
    elif method == "mlp":
        pred = mlp_assign(c, args.m)
    elif method == "bagging":
        pred = bagging_assign(c, cfg)
    else:
        pred = boosting_assign(c, cfg)
    save_assignments(pred, args.out)
    if c.truth:
        print(f"accuracy {accuracy(pred, c.truth):.4f}")
    return EXIT_OK


def _load_scenario(args) -> Scenario:
    try:
        cfg = json.loads(args.config.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.config}: invalid JSON ({e})") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    try:
        s = Scenario.from_dict(cfg)
        if args.workers is not None:
            s = Scenario.from_dict({**s.to_dict(), "workers": args.workers})
    except (TypeError, ValueError) as e:
        raise UsageError(f"{args.config}: {e}") from None
    return s


def _write_reports(report, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, "json", out / "report.json")
    save_report(report, "csv", out / "runs.csv")


def _parse_values(param, raw):
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise UsageError("--values is empty")
    if param in ("class", "meter_class"):
        for v in items:
            MeterClass.from_name(v)
        return items
    try:
        return [float(v) for v in items]
    except ValueError:
        raise UsageError(f"--values must be numbers for {param}") from None


def _bench(args) -> int:
    s = _load_scenario(args)
    report = run_scenario(s)
    _write_reports(report, args.out)
    for e in report.entries:
        mean = "n/a" if not e.applicable else f"{e.mean:.4f}"
        print(f"{e.feeder} {e.meter_class} {e.method}: {mean}")
    return EXIT_OK


def _sweep(args) -> int:
    s = _load_scenario(args)
    try:
        values = _parse_values(args.param, args.values)
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = merge_reports(sweep(s, args.param, values))
    _write_reports(report, args.out)
    for e in report.entries:
        mean = "n/a" if not e.applicable else f"{e.mean:.4f}"
        print(f"{e.feeder} {e.meter_class} {e.method} {e.param}={e.value}: {mean}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PHASEID_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"simulate": _simulate, "identify": _identify, "bench": _bench, "sweep": _sweep}[args.command]
    try:
        return handler(args)
    except UsageError as e:
        print(f"phaseid: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CampaignParseError, CampaignValidationError, PreconditionError, FileNotFoundError, ValueError) as e:
        print(f"phaseid: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # pragma: no cover - last-resort guard
        logging.getLogger("phaseid").exception("internal error")
        print(f"phaseid: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
