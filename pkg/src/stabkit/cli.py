"""Command-line front end.

Subcommands:
    run <scenario> [--set key=value]... [--out dir]
    certify <preset-or-config-file> [--set key=value]... [--out report.json]
    plot <csv> [--style s] [--out file.svg]
    list-scenarios
    list-systems

Exit codes: 0 all assertions passed, 1 assertion or certificate violation,
2 usage/config error.  STABKIT_SEED overrides the default ensemble seed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .certificates import SamplingPlan
from .controllers import loop_catalog
from .plotting import SchemaError, emit_plot
from .presets import ConfigError, CertifySpec, default_spec, preset_catalog, preset_ids
from .scenarios import RunArtifacts, ScenarioConfig, run_scenario, scenario_catalog
from .systems import system_catalog

__all__ = ["main"]


def _parse_sets(pairs) -> dict:
    out = {}
    for raw in pairs or ():
        if "=" not in raw:
            raise ConfigError(f"--set expects key=value, got {raw!r}")
        key, value = raw.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_box(text: str) -> tuple:
    """'lo:hi,lo:hi' -> ((lo, hi), ...); empty string -> ()."""
    text = text.strip()
    if not text:
        return ()
    box = []
    for part in text.split(","):
        lo, _, hi = part.partition(":")
        try:
            box.append((float(lo), float(hi)))
        except ValueError:
            raise ConfigError(f"bad interval {part!r}; expected lo:hi") from None
    return tuple(box)


def _load_config_file(path: Path) -> dict:
    values = {}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _certify_spec_from(values: dict) -> CertifySpec:
    preset_id = values.pop("preset", None)
    if preset_id is None:
        raise ConfigError("certify config must name a preset (preset = <id>)")
    spec = default_spec(preset_id)
    plan = {"grid": spec.plan.grid_per_axis, "qr": spec.plan.quasi_random,
            "seed": spec.plan.seed}
    for key, value in values.items():
        if key.startswith("param."):
            name = key[6:]
            if name not in spec.params:
                raise ConfigError(f"{preset_id} has no parameter {name!r}; "
                                  f"known: {sorted(spec.params)}")
            current = spec.params[name]
            if isinstance(current, tuple):
                spec.params[name] = tuple(float(v) for v in value.split(","))
            elif isinstance(current, int) and not isinstance(current, bool):
                spec.params[name] = int(float(value))
            else:
                spec.params[name] = float(value)
        elif key == "region.x":
            spec.x_box = _parse_box(value)
        elif key == "region.d":
            spec.d_box = _parse_box(value)
        elif key in ("plan.grid", "plan.qr", "plan.seed"):
            plan[key.split(".", 1)[1]] = int(value)
        else:
            raise ConfigError(f"unknown certify config key {key!r}")
    spec.plan = SamplingPlan(grid_per_axis=plan["grid"], quasi_random=plan["qr"],
                             seed=plan["seed"])
    return spec


def _cmd_run(args) -> int:
    config = ScenarioConfig(scenario=args.scenario, overrides=_parse_sets(args.set),
                            out_dir=Path(args.out))
    artifacts: RunArtifacts = run_scenario(config)
    for item in artifacts.summary["assertions"]:
        mark = "PASS" if item["passed"] else "FAIL"
        print(f"[{mark}] {args.scenario}: {item['id']}: {item['detail']}")
    print(f"summary: {artifacts.summary_path}")
    return 0 if artifacts.passed else 1


def _cmd_certify(args) -> int:
    target = Path(args.config)
    if target.is_file():
        values = _load_config_file(target)
    elif args.config in preset_ids():
        values = {"preset": args.config}
    else:
        raise ConfigError(f"{args.config!r} is neither a config file nor a preset id; "
                          f"presets: {', '.join(preset_ids())}")
    values.update(_parse_sets(args.set))
    spec = _certify_spec_from(values)
    from .presets import run_certify

    report = run_certify(spec)
    out = Path(args.out) if args.out else Path(f"{spec.preset.replace('/', '_')}_report.json")
    report.save(out)
    print(f"{spec.preset}: {report.verdict} (worst margin {report.worst_margin:.6g})")
    for w in report.witnesses[:5]:
        print(f"  witness {w.inequality_id}: x={list(w.x)} d={list(w.d)} "
              f"lhs={w.lhs:.6g} rhs={w.rhs:.6g}")
    if len(report.witnesses) > 5:
        print(f"  ... {len(report.witnesses) - 5} more witnesses in the report")
    print(f"report: {out}")
    return 1 if report.violated else 0


def _cmd_plot(args) -> int:
    src = Path(args.csv)
    out = Path(args.out) if args.out else src.with_suffix(".svg")
    emit_plot(src, out, style=args.style)
    print(f"plot: {out}")
    return 0


def _cmd_list_scenarios(_args) -> int:
    for sid, desc in scenario_catalog():
        print(f"{sid:18s} {desc}")
    return 0


def _cmd_list_systems(_args) -> int:
    print("systems:")
    for sid, desc, defaults in system_catalog():
        extra = f"  (params: {', '.join(f'{k}={v:g}' for k, v in sorted(defaults.items()))})" \
            if defaults else ""
        print(f"  {sid:10s} {desc}{extra}")
    print("loops:")
    for lid, desc, defaults in loop_catalog():
        print(f"  {lid:14s} {desc}")
    print("certify presets:")
    for pid, desc in preset_catalog():
        print(f"  {pid:12s} {desc}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabkit",
                                     description="simulate, certify and measure "
                                                 "output stability of adaptive loops")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a named scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_run.add_argument("--out", default="out")
    p_run.set_defaults(fn=_cmd_run)

    p_cert = sub.add_parser("certify", help="run a certificate check from a preset or config file")
    p_cert.add_argument("config", help="preset id or path to a key=value config file")
    p_cert.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_cert.add_argument("--out", default=None)
    p_cert.set_defaults(fn=_cmd_certify)

    p_plot = sub.add_parser("plot", help="render a stabkit CSV to SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--style", default="auto")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(fn=_cmd_plot)

    sub.add_parser("list-scenarios", help="list scenario ids").set_defaults(fn=_cmd_list_scenarios)
    sub.add_parser("list-systems", help="list systems, loops and presets").set_defaults(
        fn=_cmd_list_systems)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
