"""Command-line entry point.

    vmcboost analyze  [--config cfg.json] [--out DIR] [--<field> VALUE ...]
    vmcboost simulate ...
    vmcboost design   --target_v_out 480 [--margin 0.25]
    vmcboost losses   [--lossless]
    vmcboost sweep    [--p_min 50 --p_max 360 --points 20]

The configuration is one JSON object of flat SI-unit fields (see FIELDS);
any field can be overridden with a flag of the same name.  Every command
writes ``summary.json`` and a copy of ``schema.json`` to the output
directory; simulate adds ``waveforms.csv``, sweep adds ``sweep.csv``, and
``--figures`` adds PNG plots.

Exit codes: 0 success, 1 configuration or feasibility error, 2 model
validation failure, 3 steady state not reached.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import losses as ls
from . import metrics as mt
from . import steady_state as ss
from .errors import ConfigurationError, NumericalError, PreconditionError
from .model import build_proposed_converter, validate_model
from .params import ConverterParams, Parasitics
from .schedule import gate_schedule
from .simulation import CSV_COLUMNS, SimConfig, check_diode_consistency, run_to_steady_state

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 1, 2, 3

CONVERTER_FIELDS = ("v_in", "duty", "f_sw", "l1", "l2", "c1", "c2", "c3", "c4", "c_out", "r_load")
PARASITIC_FIELDS = tuple(f.name for f in dataclasses.fields(Parasitics))

# field -> (type, default); converter and parasitic defaults come from ConverterParams.reference_design()
FIELDS = {
    **{name: (float, None) for name in CONVERTER_FIELDS + PARASITIC_FIELDS},
    "samples_per_period": (int, 512),
    "max_cycles": (int, 100_000),
    "steady_tol": (float, 1e-9),
    "initial_state": (str, "analytic-preload"),
    "method": (str, "shooting"),
    "target_v_out": (float, None),
    "margin": (float, 0.25),
    "p_min": (float, 50.0),
    "p_max": (float, 360.0),
    "points": (int, 20),
}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def schema():
    return json.loads(resources.files("vmcboost").joinpath("schema.json").read_text())


def load_config(path=None, overrides=None):
    """Merge defaults, the JSON file at ``path`` and flag overrides into a flat dict."""
    cfg = {name: default for name, (_, default) in FIELDS.items()}
    base = ConverterParams.reference_design()
    for name in CONVERTER_FIELDS:
        cfg[name] = getattr(base, name)
    for name in PARASITIC_FIELDS:
        cfg[name] = getattr(base.parasitics, name)
    layers = []
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
        layers.append(data)
    layers.append(overrides or {})
    for layer in layers:
        for key, value in layer.items():
            if key not in FIELDS:
                raise ConfigurationError(f"unknown config field {key!r}", key)
            cfg[key] = _coerce(key, value)
    return cfg


def _coerce(key, value):
    kind = FIELDS[key][0]
    if value is None:
        return None
    if kind is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{key} must be a string, got {value!r}", key)
        return value
    if isinstance(value, bool):
        raise ConfigurationError(f"{key} must be a number, got {value!r}", key)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key} must be a number, got {value!r}", key) from None
    if kind is int:
        if not number.is_integer():
            raise ConfigurationError(f"{key} must be an integer, got {value!r}", key)
        return int(number)
    return number


def params_from(cfg, lossless=False):
    par = Parasitics() if lossless else Parasitics(**{n: cfg[n] for n in PARASITIC_FIELDS})
    return ConverterParams(**{n: cfg[n] for n in CONVERTER_FIELDS}, parasitics=par)


def sim_config_from(cfg):
    return SimConfig(
        samples_per_period=cfg["samples_per_period"],
        max_cycles=cfg["max_cycles"],
        steady_tol=cfg["steady_tol"],
        initial_state=cfg["initial_state"],
        method=cfg["method"],
    )


def _clean(value):
    """JSON-ready copy: numpy scalars to floats, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path, document):
    text = json.dumps(_clean(document), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def _metrics_dict(m):
    return dataclasses.asdict(m)


def _build_model(params, include_parasitics):
    model = build_proposed_converter(params, include_parasitics=include_parasitics)
    report = validate_model(model)
    if not report.ok:
        lines = "; ".join(f"{name}: {msg}" for name, msg in report.failures)
        raise CliError(f"model validation failed: {lines}", EXIT_VALIDATION)
    return model


def cmd_analyze(cfg, args):
    params = params_from(cfg)
    op = ss.analytic_operating_point(params)
    return {"operating_point": dataclasses.asdict(op)}, {}


def cmd_simulate(cfg, args):
    params = params_from(cfg)
    if not args.lossy:
        params = params.ideal()
    model = _build_model(params, include_parasitics=args.lossy)
    schedule = gate_schedule(params.duty, params.f_sw)
    res = run_to_steady_state(model, schedule, params, sim_config_from(cfg))
    wf = res.final_cycle
    names = CSV_COLUMNS[1:] + ("iout",)
    result = {
        "converged": res.converged,
        "cycles_used": res.cycles_used,
        "last_change": res.last_change,
        "lossy_dynamics": bool(args.lossy),
        "metrics": {n: _metrics_dict(mt.column_metrics(wf, n)) for n in names},
        "stress": mt.stress_report(wf),
        "balance": dataclasses.asdict(mt.balance_checks(wf, params)),
    }
    consistency = check_diode_consistency(model, res)
    result["diode_consistency"] = {
        "violations": len(consistency.violations),
        "delayed_turn_on": len(consistency.delayed_turn_on),
    }
    files = {"waveforms.csv": wf}
    if not res.converged:
        raise _NotConverged(result, files, res.cycles_used)
    return result, files


class _NotConverged(Exception):
    def __init__(self, result, files, cycles):
        super().__init__(f"steady state not reached within {cycles} cycles")
        self.result, self.files = result, files


def cmd_design(cfg, args):
    params = params_from(cfg)
    target = cfg["target_v_out"]
    if target is None:
        target = ss.output_voltage(params.v_in, params.duty)
    d = ss.design_for(params, target, cfg["margin"])
    return {
        "target_v_out": target,
        "duty": d.duty,
        "margin": d.margin,
        "operating_point": dataclasses.asdict(d.operating_point),
        "ratings": d.ratings,
    }, {}


def _loss_dict(report):
    doc = report.as_dict()
    doc["items"] = report.items()
    return doc


def cmd_losses(cfg, args):
    params = params_from(cfg, lossless=args.lossless)
    _build_model(params, include_parasitics=True)
    trimmed, res = ls.rated_operating_point(params, config=ls.LOSS_SIM)
    if not res.converged:
        raise CliError(f"steady state not reached at duty {trimmed.duty}", EXIT_CONVERGENCE)
    report = ls.loss_breakdown(trimmed, res)
    result = {"nominal_duty": params.duty, "report": _loss_dict(report)}
    files = {"figure:losses.png": report, "figure:waveforms.png": res.final_cycle}
    return result, files


def cmd_sweep(cfg, args):
    params = params_from(cfg, lossless=args.lossless)
    _build_model(params, include_parasitics=True)
    n = cfg["points"]
    if n is None or n < 1:
        raise ConfigurationError("points must be >= 1", "points")
    if not (cfg["p_min"] > 0 and cfg["p_max"] >= cfg["p_min"]):
        raise ConfigurationError("need 0 < p_min <= p_max", "p_min")
    v_nominal = ss.output_voltage(params.v_in, params.duty)
    trimmed, _ = ls.rated_operating_point(params, config=ls.LOSS_SIM)
    targets = [float(p) for p in np.linspace(cfg["p_min"], cfg["p_max"], n)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        points = ls.efficiency_sweep(trimmed, targets, v_out_nominal=v_nominal, config=ls.LOSS_SIM)
    rows = [
        {
            "p_out_target": pt.p_out_target,
            "p_out": pt.p_out,
            "efficiency": pt.efficiency,
            "r_load": pt.r_load,
            "warning": pt.warning,
        }
        for pt in points
    ]
    for pt in points:
        if pt.warning:
            print(f"warning: {pt.p_out_target:g} W: {pt.warning}", file=sys.stderr)
    result = {"duty": trimmed.duty, "v_out_nominal": v_nominal, "points": rows}
    return result, {"sweep.csv": points, "figure:efficiency.png": points}


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "design": cmd_design,
    "losses": cmd_losses,
    "sweep": cmd_sweep,
}


def write_sweep_csv(path, points):
    lines = ["p_out,efficiency"]
    for pt in points:
        if pt.warning.startswith("skipped"):
            continue
        lines.append(f"{float(pt.p_out)!r},{float(pt.efficiency)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _emit(out, files, figures):
    if figures:
        from . import plotting  # matplotlib is only needed here

    for name, payload in files.items():
        if name.startswith("figure:"):
            if not figures:
                continue
            name = name.split(":", 1)[1]
            if name == "losses.png":
                fig = plotting.loss_share_figure(payload)
            elif name == "efficiency.png":
                fig = plotting.efficiency_figure(payload)
            else:
                fig = plotting.waveform_figure(payload)
            plotting.save(fig, out / name)
        elif name == "waveforms.csv":
            payload.to_csv(out / name)
            if figures:
                plotting.save(plotting.waveform_figure(payload), out / "waveforms.png")
        elif name == "sweep.csv":
            write_sweep_csv(out / name, payload)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with flat SI-unit fields")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--figures", action="store_true", help="also render PNG figures")
    group = common.add_argument_group("field overrides")
    for name, (kind, _) in FIELDS.items():
        flags = [f"--{name}"]
        if "_" in name:
            flags.append(f"--{name.replace('_', '-')}")
        group.add_argument(*flags, dest=f"field_{name}", metavar=kind.__name__.upper(),
                           default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="vmcboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed-form operating point")
    p = sub.add_parser("simulate", parents=[common], help="steady-state waveforms")
    p.add_argument("--lossy", action="store_true", help="keep parasitics in the dynamics")
    sub.add_parser("design", parents=[common], help="duty and ratings for a target output")
    for name, text in (("losses", "itemized losses at the rated point"), ("sweep", "efficiency vs output power")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--lossless", action="store_true", help="set every parasitic to zero")
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("lossy", "lossless"):
        if not hasattr(args, flag):
            setattr(args, flag, False)
    overrides = {k[len("field_"):]: v for k, v in vars(args).items() if k.startswith("field_")}
    out = Path(args.out)
    try:
        cfg = load_config(args.config, overrides)
        result, files = COMMANDS[args.command](cfg, args)
        code, message = EXIT_OK, None
    except _NotConverged as exc:
        result, files, code, message = exc.result, exc.files, EXIT_CONVERGENCE, str(exc)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigurationError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    out.mkdir(parents=True, exist_ok=True)
    document = {"command": args.command, "status": "ok" if code == EXIT_OK else "not_converged",
                "config": cfg, "result": result}
    jsonschema.validate(_clean(document), schema())
    write_json(out / "summary.json", document)
    write_json(out / "schema.json", schema())
    _emit(out, files, args.figures)
    if message:
        print(f"error: {message}", file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
