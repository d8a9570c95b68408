"""Command-line front end: ``illusion``, ``simulate``, ``sweep`` and ``fit``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure. All outputs are deterministic given the command line and seed.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from collections import Counter, OrderedDict
from pathlib import Path
from typing import Any, Optional, Sequence

from ..core import (
    ConfigurationError,
    DataError,
    DegeneratePriorError,
    FitFailureError,
    InvalidParameterError,
    SimulationTimeoutError,
)
from ..fit import ParamSpace, aic, fit_mle
from ..paradigms import records_from_csv, records_to_csv, records_to_json, run_block
from ..paradigms.records import fmt
from .registry import (
    DEFAULT_SPACES,
    make_observer,
    make_specs,
    observer_family,
    observer_names,
    parse_value,
)
from .scenarios import SCENARIOS, SweepAxis, get_scenario
from .svg import line_chart

SCHEMA_VERSION = 1
DEFAULT_REPS = {"illusion": 10_000, "simulate": 1000, "sweep": 2000}
SVG_SWEEP_MAX_REPS = 2000
MAX_SWEEP_AXES = 2

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _round9(obj: Any) -> Any:
    """Round floats to 9 significant digits for stable, diff-able JSON."""
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(_round9(obj), indent=2, sort_keys=True) + "\n")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigurationError("config must be a JSON object")
    if config.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"config schema_version must be {SCHEMA_VERSION}")
    return config


def _pick(flag, config: dict, key: str, default):
    if flag is not None:
        return flag
    return config.get(key, default)


def _key_values(items: Optional[Sequence[str]]) -> dict:
    """``key=value`` pairs; comma-separated values become lists."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        parts = [parse_value(p) for p in raw.split(",")]
        out[key.strip().replace("-", "_")] = parts if len(parts) > 1 else parts[0]
    return out


def _extra_overrides(extra: Sequence[str]) -> dict:
    """Turn leftover ``--name value`` tokens into overrides."""
    out, tokens = {}, list(extra)
    while tokens:
        tok = tokens.pop(0)
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigurationError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, raw = tok[2:].split("=", 1)
        elif tokens:
            key, raw = tok[2:], tokens.pop(0)
        else:
            raise ConfigurationError(f"option {tok} needs a value")
        out[key.replace("-", "_")] = parse_value(raw)
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--config", default=None, help="JSON run configuration (schema_version 1)")
    p.add_argument("--out-dir", default=None, help="output directory (default: current)")
    p.add_argument("--reps", type=int, default=None, help="repetitions per trial type")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percept-fusion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("illusion", help="run a named illusion scenario")
    p.add_argument("name", nargs="?", help="scenario name (see --list)")
    p.add_argument("--list", action="store_true", help="list registered scenarios")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override")
    p.add_argument("--no-svg", action="store_true", help="skip the default sweep plot")
    _common(p)

    p = sub.add_parser("simulate", help="simulate a custom paradigm with a chosen observer")
    p.add_argument("--paradigm", default=None)
    p.add_argument("--arg", action="append", metavar="KEY=VALUE[,VALUE...]", help="paradigm argument")
    p.add_argument("--observer", default=None, help=", ".join(observer_names()))
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="observer parameter")
    _common(p)

    p = sub.add_parser("sweep", help="grid sweep of a scenario over up to two parameters")
    p.add_argument("name", nargs="?", help="scenario name")
    p.add_argument("--axis", action="append", metavar="NAME:MIN:MAX:STEPS")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override")
    _common(p)

    p = sub.add_parser("fit", help="maximum-likelihood fit of an observer to trials.csv data")
    p.add_argument("--data", default=None, help="trial CSV as written by illusion/simulate")
    p.add_argument("--observer", default=None, help=", ".join(observer_names()))
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="fixed observer parameter")
    p.add_argument("--free", action="append", metavar="NAME:LO:HI[:log]", help="free parameter")
    p.add_argument("--restarts", type=int, default=None)
    _common(p)
    return parser


def _out_dir(args, config) -> Path:
    out = Path(_pick(args.out_dir, config, "out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_command(config: dict, command: str) -> None:
    if config.get("command", command) != command:
        raise ConfigurationError(f"config is for command {config['command']!r}, not {command!r}")


def _reps(args, config, command) -> int:
    reps = int(_pick(args.reps, config, "reps", DEFAULT_REPS.get(command, 1000)))
    if reps < 0:
        raise ConfigurationError("--reps must be >= 0")
    return reps


# ---------------------------------------------------------------------------
# commands


def cmd_illusion(args, extra) -> int:
    if args.list:
        for name in sorted(SCENARIOS):
            print(f"{name:22s} {SCENARIOS[name].title}")
        return EXIT_OK
    config = _load_config(args.config)
    _check_command(config, "illusion")
    name = args.name or config.get("scenario")
    if not name:
        raise ConfigurationError(f"missing scenario name; registered: {', '.join(sorted(SCENARIOS))}")
    scenario = get_scenario(name)
    overrides = {**config.get("overrides", {}), **_key_values(args.set), **_extra_overrides(extra)}
    params = scenario.params(overrides)
    seed = int(_pick(args.seed, config, "seed", 0))
    reps = _reps(args, config, "illusion")
    out = _out_dir(args, config)

    records, summary = scenario.run(params, reps, seed)
    summary.update({"seed": seed, "reps": reps, "params": params})
    if scenario.sweep is not None and not args.no_svg:
        axis = scenario.sweep
        sweep_reps = min(reps, SVG_SWEEP_MAX_REPS)
        rates = []
        for value in axis.values:
            _, cell = scenario.run({**params, axis.name: float(value)}, sweep_reps, seed)
            rates.append(cell["illusory_rate"])
        summary["sweep"] = {"axis": axis.name, "values": list(axis.values), "illusory_rate": rates, "reps": sweep_reps}
        svg = line_chart([(scenario.name, list(axis.values), rates)], axis.name, "rate", scenario.title)
        (out / f"{scenario.name}_sweep.svg").write_text(svg)
    (out / "trials.csv").write_text(records_to_csv(records))
    _write_json(out / "summary.json", summary)
    print(
        f"{scenario.name}: rate {summary['illusory_rate']:.4f} vs control {summary['control_rate']:.4f} "
        f"({summary['effect_direction']})"
    )
    return EXIT_OK


def cmd_simulate(args, extra) -> int:
    if extra:
        raise ConfigurationError(f"unexpected arguments: {' '.join(extra)}")
    config = _load_config(args.config)
    _check_command(config, "simulate")
    paradigm_cfg = config.get("paradigm", {})
    observer_cfg = config.get("observer", {})
    paradigm = args.paradigm or paradigm_cfg.get("name")
    observer_name = args.observer or observer_cfg.get("name")
    if not paradigm or not observer_name:
        raise ConfigurationError("simulate needs --paradigm and --observer")
    specs = make_specs(paradigm, {**paradigm_cfg.get("args", {}), **_key_values(args.arg)})
    obs_params = {**observer_cfg.get("params", {}), **_key_values(args.param)}
    observer = make_observer(observer_name, obs_params)
    seed = int(_pick(args.seed, config, "seed", 0))
    reps = _reps(args, config, "simulate")
    out = _out_dir(args, config)

    records = run_block(specs, observer, reps, seed)
    groups: "OrderedDict[str, list]" = OrderedDict()
    for r in records:
        groups.setdefault(r.spec.condition, []).append(r)
    conditions = []
    for cond, recs in groups.items():
        row = {"condition": cond, "task": recs[0].spec.task.value, "n": len(recs)}
        if isinstance(recs[0].response, float):
            row["mean_response"] = sum(r.response for r in recs) / len(recs)
        else:
            counts = Counter(str(r.response) for r in recs)
            row["responses"] = {k: counts[k] for k in sorted(counts)}
        rts = [r.rt_ms for r in recs if r.rt_ms is not None]
        if rts:
            row["mean_rt_ms"] = sum(rts) / len(rts)
        conditions.append(row)
    summary = {
        "paradigm": paradigm,
        "observer": observer_name,
        "observer_params": observer.params(),
        "seed": seed,
        "reps": reps,
        "conditions": conditions,
    }
    (out / "trials.csv").write_text(records_to_csv(records))
    (out / "trials.json").write_text(records_to_json(records))
    _write_json(out / "summary.json", summary)
    print(f"simulated {len(records)} trials over {len(specs)} trial types")
    return EXIT_OK


def cmd_sweep(args, extra) -> int:
    config = _load_config(args.config)
    _check_command(config, "sweep")
    name = args.name or config.get("scenario")
    if not name:
        raise ConfigurationError(f"missing scenario name; registered: {', '.join(sorted(SCENARIOS))}")
    scenario = get_scenario(name)
    raw_axes = args.axis or config.get("axes") or []
    axes = [SweepAxis.parse(a) if isinstance(a, str) else SweepAxis(**a) for a in raw_axes]
    if not axes:
        if scenario.sweep is None:
            raise ConfigurationError(f"scenario {name!r} has no default sweep axis; pass --axis")
        axes = [scenario.sweep]
    if len(axes) > MAX_SWEEP_AXES:
        raise ConfigurationError(f"at most {MAX_SWEEP_AXES} sweep axes are supported")
    overrides = {**config.get("overrides", {}), **_key_values(args.set), **_extra_overrides(extra)}
    base = scenario.params(overrides)
    for axis in axes:
        scenario.params({axis.name: 0.0})  # rejects unknown axis names
    seed = int(_pick(args.seed, config, "seed", 0))
    reps = _reps(args, config, "sweep")
    out = _out_dir(args, config)

    # every cell reuses the master seed: common random numbers across the grid
    names = [a.name for a in axes]
    rows = []
    for combo in itertools.product(*(a.values for a in axes)):
        cell = dict(zip(names, (float(v) for v in combo)))
        _, summary = scenario.run({**base, **cell}, reps, seed)
        rows.append((combo, summary))
    header = names + ["illusory_rate", "control_rate", "effect", "n_test_trials", "n_control_trials"]
    lines = [",".join(header)]
    for combo, s in rows:
        vals = [fmt(v) for v in combo] + [fmt(s["illusory_rate"]), fmt(s["control_rate"]), fmt(s["effect"])]
        vals += [str(s["n_test_trials"]), str(s["n_control_trials"])]
        lines.append(",".join(vals))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")

    if len(axes) == 1:
        series = [(scenario.name, [float(c[0]) for c, _ in rows], [s["illusory_rate"] for _, s in rows])]
    else:
        series = []
        for v2 in axes[1].values:
            pts = [(c[0], s["illusory_rate"]) for c, s in rows if c[1] == v2]
            series.append((f"{axes[1].name}={fmt(v2)}", [float(x) for x, _ in pts], [y for _, y in pts]))
    (out / "sweep.svg").write_text(line_chart(series, axes[0].name, "rate", scenario.title))
    print(f"swept {len(rows)} cells of {scenario.name}")
    return EXIT_OK


def _parse_free(items: Sequence[str]) -> ParamSpace:
    names, lo, hi, tr = [], [], [], []
    for item in items:
        parts = item.split(":")
        if len(parts) not in (3, 4):
            raise ConfigurationError(f"free parameter {item!r} must look like name:lo:hi[:log]")
        try:
            lo.append(float(parts[1]))
            hi.append(float(parts[2]))
        except ValueError:
            raise ConfigurationError(f"free parameter {item!r} has non-numeric bounds") from None
        names.append(parts[0].replace("-", "_"))
        tr.append("log" if len(parts) == 4 and parts[3] == "log" else "identity")
    return ParamSpace(tuple(names), tuple(lo), tuple(hi), tuple(tr))


def cmd_fit(args, extra) -> int:
    if extra:
        raise ConfigurationError(f"unexpected arguments: {' '.join(extra)}")
    config = _load_config(args.config)
    _check_command(config, "fit")
    data_path = args.data or config.get("data")
    observer_cfg = config.get("observer", {})
    observer_name = args.observer or observer_cfg.get("name")
    if not data_path or not observer_name:
        raise ConfigurationError("fit needs --data and --observer")
    fixed = {**observer_cfg.get("params", {}), **_key_values(args.param)}
    free = args.free or config.get("free")
    space = _parse_free(free) if free else DEFAULT_SPACES.get(observer_name)
    if space is None:
        raise ConfigurationError(f"no default parameter space for {observer_name!r}; pass --free")
    restarts = int(_pick(args.restarts, config, "restarts", 4))
    seed = int(_pick(args.seed, config, "seed", 0))
    out = _out_dir(args, config)

    try:
        text = Path(data_path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {data_path}: {exc}") from None
    data = records_from_csv(text)
    family = observer_family(observer_name, fixed)
    template = family({})
    for r in data:
        template.check(r.spec)

    result = fit_mle(family, data, space, restarts, seed)
    report = result.to_json()
    report.update(
        {
            "observer": observer_name,
            "fixed_params": fixed,
            "data": str(data_path),
            "n_data": len(data),
            "aic": aic(result.nll, result.n_params),
        }
    )
    _write_json(out / "fit.json", report)

    best = family(result.params)
    lines = ["condition,task,response,observed,predicted,n_trials"]
    groups: "OrderedDict[Any, Counter]" = OrderedDict()
    for r in data:
        groups.setdefault(r.spec, Counter())[r.response] += 1
    for spec, counts in groups.items():
        n = sum(counts.values())
        probs = best.response_probabilities(spec)
        for resp in sorted(set(counts) | set(probs), key=str):
            lines.append(
                f"{spec.condition},{spec.task.value},{resp},{counts.get(resp, 0)},{fmt(n * probs.get(resp, 0.0))},{n}"
            )
    (out / "residuals.csv").write_text("\n".join(lines) + "\n")
    print(f"fit {observer_name}: nll {result.nll:.4f}, params {json.dumps(_round9(result.params), sort_keys=True)}")
    return EXIT_OK


COMMANDS = {"illusion": cmd_illusion, "simulate": cmd_simulate, "sweep": cmd_sweep, "fit": cmd_fit}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return COMMANDS[args.command](args, extra)
    except (ConfigurationError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitFailureError, SimulationTimeoutError, DegeneratePriorError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())
