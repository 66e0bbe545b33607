"""Command-line entry point.

Subcommands: bounds (closed-form quantities), simulate (single trajectory),
experiment (one of the named studies), ingest-check (validate a point cloud).

Option precedence, lowest to highest: built-in defaults, then a JSON config
file passed with --config, then flags given explicitly on the command line.
Unknown keys in the config file are an error, not a warning.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import CausalHorizonError, UsageError
from .experiments import EXPERIMENT_KINDS, ExperimentSpec, run_experiment
from .fields import LinearField, make_canyon, make_tearing
from .geometry import (
    GeometryParams,
    conjugate_point_distance,
    horizon_energy_lower_bound,
    identity_entropy_bound,
    initial_contraction_bound,
    mollified_entropy,
    required_viscosity,
    shock_thickness,
    tearing_time_bound,
)
from .reporting import ExperimentReport, SeriesSpec, Table, emit_report, ingest_pointcloud
from .sampler import SamplerConfig, run_flow

OUT_ENV = "CAUSAL_HORIZON_OUT"

_QUANTITIES = (
    "entropy",
    "horizon",
    "contraction",
    "tc",
    "conjugate",
    "viscosity",
    "identity",
    "shock",
)

_COMMON_DEFAULTS = dict(seed=0, out=None, formats="csv,json")

_DEFAULTS: dict[str, dict] = {
    "bounds": dict(
        _COMMON_DEFAULTS,
        quantities=[],
        n=2,
        sigma=0.1,
        delta=1.0,
        D=1.0,
        kappa=0.0,
        K=0.0,
        kappa_minus=0.0,
        lambda0=None,
        epsilon=0.1,
        c0=None,
        cv=1.0,
        density_ratio=1.0,
    ),
    "simulate": dict(
        _COMMON_DEFAULTS,
        field="tearing",
        n=2,
        D=1.0,
        lambda0=None,
        sigma=0.1,
        delta=1.0,
        kappa=0.0,
        density_ratio=1.0,
        rate=-1.0,
        x0=None,
        mode="ode",
        epsilon=0.0,
        epsilon_req=0.0,
        lambda_thresh=-2.5,
        M=1,
        divergence="exact",
        dt=0.005,
        t_max=1.0,
        det_floor=1e-6,
        shadow=False,
    ),
    "experiment": dict(_COMMON_DEFAULTS, kind=None, params={}),
    "ingest-check": dict(_COMMON_DEFAULTS, cloud=None, dim=2),
}


@dataclass
class RunConfig:
    command: str
    options: dict = dc_field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.options["seed"])

    @property
    def out_dir(self) -> Path | None:
        out = self.options.get("out")
        if out is None:
            out = os.environ.get(OUT_ENV)
        return Path(out) if out else None

    @property
    def formats(self) -> tuple[str, ...]:
        raw = self.options["formats"]
        if isinstance(raw, str):
            parts = tuple(p.strip() for p in raw.split(",") if p.strip())
        else:
            parts = tuple(raw)
        bad = set(parts) - {"csv", "json", "svg"}
        if bad:
            raise UsageError(f"unknown output format(s): {sorted(bad)}")
        return parts


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse failures as clean exit-code-2 errors
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="causal-horizon", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--config", type=str, default=S, help="JSON config file")
        p.add_argument("--out", type=str, default=S, help=f"output dir (or ${OUT_ENV})")
        p.add_argument("--format", dest="formats", type=str, default=S,
                       help="comma list from csv,json,svg")

    b = sub.add_parser("bounds", help="evaluate closed-form bounds")
    common(b)
    for q in _QUANTITIES:
        b.add_argument(f"--{q}", dest=q, action="store_true", default=S)
    b.add_argument("--all", dest="all_quantities", action="store_true", default=S)
    b.add_argument("--n", type=int, default=S)
    b.add_argument("--sigma", type=float, default=S)
    b.add_argument("--delta", type=float, default=S)
    b.add_argument("--D", type=float, default=S)
    b.add_argument("--kappa", type=float, default=S)
    b.add_argument("--K", type=float, default=S)
    b.add_argument("--kappa-minus", dest="kappa_minus", type=float, default=S)
    b.add_argument("--lambda0", type=float, default=S)
    b.add_argument("--epsilon", type=float, default=S)
    b.add_argument("--c0", type=float, default=S)
    b.add_argument("--cv", type=float, default=S)
    b.add_argument("--density-ratio", dest="density_ratio", type=float, default=S)

    s = sub.add_parser("simulate", help="run one trajectory and emit its record")
    common(s)
    s.add_argument("--field", choices=["canyon", "tearing", "linear"], default=S)
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--D", type=float, default=S)
    s.add_argument("--lambda0", type=float, default=S)
    s.add_argument("--sigma", type=float, default=S)
    s.add_argument("--delta", type=float, default=S)
    s.add_argument("--kappa", type=float, default=S)
    s.add_argument("--density-ratio", dest="density_ratio", type=float, default=S)
    s.add_argument("--rate", type=float, default=S, help="linear field: u = rate * x")
    s.add_argument("--x0", type=str, default=S, help="comma-separated start point")
    s.add_argument("--mode", choices=["ode", "sde", "gacf"], default=S)
    s.add_argument("--epsilon", type=float, default=S, help="fixed viscosity (sde)")
    s.add_argument("--epsilon-req", dest="epsilon_req", type=float, default=S)
    s.add_argument("--lambda-thresh", dest="lambda_thresh", type=float, default=S)
    s.add_argument("--M", type=int, default=S, help="probes per divergence estimate")
    s.add_argument("--divergence", choices=["exact", "hutchinson"], default=S)
    s.add_argument("--dt", type=float, default=S)
    s.add_argument("--t-max", dest="t_max", type=float, default=S)
    s.add_argument("--det-floor", dest="det_floor", type=float, default=S)
    s.add_argument("--shadow", action="store_true", default=S,
                   help="track exact divergence alongside the estimator")

    e = sub.add_parser("experiment", help="run a named experiment")
    common(e)
    e.add_argument("kind", choices=list(EXPERIMENT_KINDS))
    e.add_argument("--set", dest="sets", action="append", default=S,
                   metavar="KEY=VALUE", help="override one experiment parameter")

    i = sub.add_parser("ingest-check", help="validate a point-cloud file")
    common(i)
    i.add_argument("--cloud", type=str, default=S)
    i.add_argument("--dim", type=int, default=S)

    return parser


def parse_config(argv) -> RunConfig:
    """Resolve argv plus any --config file into a RunConfig."""
    parser = _build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    config_path = ns.pop("config", None)

    options = dict(_DEFAULTS[command])
    if config_path is not None:
        try:
            with open(config_path) as fh:
                file_opts = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {config_path}: {exc}") from None
        if not isinstance(file_opts, dict):
            raise UsageError(f"config file {config_path} must hold a JSON object")
        for key, value in file_opts.items():
            if key not in options:
                raise UsageError(f"unknown config key {key!r} for command {command!r}")
            options[key] = value

    sets = ns.pop("sets", None)
    if command == "bounds":
        unknown_q = set(options.get("quantities") or []) - set(_QUANTITIES)
        if unknown_q:
            raise UsageError(f"unknown quantity name(s): {sorted(unknown_q)}")
    if ns.pop("all_quantities", False):
        options["quantities"] = list(_QUANTITIES)
    picked = [q for q in _QUANTITIES if ns.pop(q, False)]
    if picked:
        options["quantities"] = sorted(set(options.get("quantities", [])) | set(picked),
                                       key=_QUANTITIES.index)
    for key, value in ns.items():
        options[key] = value
    if sets:
        params = dict(options.get("params") or {})
        for item in sets:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            key, _, raw = item.partition("=")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            params[key.strip()] = value
        options["params"] = params
    return RunConfig(command=command, options=options)


def _parse_point(text: str | None, dim: int) -> np.ndarray:
    if text is None:
        return np.zeros(dim)
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad point {text!r}; expected comma-separated floats") from None
    if len(vals) != dim:
        raise UsageError(f"point has {len(vals)} coordinates, field needs {dim}")
    return np.asarray(vals)


def _cmd_bounds(cfg: RunConfig) -> int:
    o = cfg.options
    quantities = o["quantities"] or list(_QUANTITIES)
    geo = GeometryParams(
        n=o["n"], Delta=o["delta"], sigma=o["sigma"], D=o["D"],
        kappa=o["kappa"], K_pos=o["K"], kappa_minus=o["kappa_minus"],
        C_V=o["cv"], C0=o["c0"], density_ratio=o["density_ratio"],
    )
    lam = o["lambda0"] if o["lambda0"] is not None else initial_contraction_bound(geo)

    values = {}
    for q in quantities:
        if q == "entropy":
            values["mollified_entropy"] = mollified_entropy(o["n"], o["sigma"])
        elif q == "horizon":
            values["horizon_energy_lower_bound"] = horizon_energy_lower_bound(geo, o["epsilon"])
        elif q == "contraction":
            values["initial_contraction_bound"] = lam
        elif q == "tc":
            values["tearing_time_bound"] = tearing_time_bound(o["n"], o["K"], o["D"], lam)
        elif q == "conjugate":
            values["conjugate_point_distance"] = conjugate_point_distance(o["K"])
        elif q == "viscosity":
            values["required_viscosity"] = required_viscosity(
                geo.effective_C0, o["delta"], o["kappa_minus"], o["D"]
            )
        elif q == "identity":
            values["identity_entropy_bound"] = identity_entropy_bound(o["n"], o["epsilon"])
        elif q == "shock":
            values["shock_thickness"] = shock_thickness(o["epsilon"], o["D"])

    for name, value in values.items():
        if value is None:
            print(f"{name},none")
        else:
            print(f"{name},{value:.17g}")

    out = cfg.out_dir
    if out is not None:
        table = Table(columns=["quantity", "value"], rows=[[k, v] for k, v in values.items()])
        report = ExperimentReport(
            kind="bounds",
            parameters={k: o[k] for k in ("n", "sigma", "delta", "D", "kappa", "K",
                                          "kappa_minus", "epsilon", "cv", "density_ratio")},
            tables={"values": table},
            stats={},
            provenance={"version": __version__},
        )
        manifest = emit_report(report, out, formats=cfg.formats)
        for path in manifest:
            print(f"wrote {path}")
    return 0


def _build_sim_field(o):
    if o["field"] == "canyon":
        return make_canyon(D=o["D"])
    if o["field"] == "tearing":
        return make_tearing(
            o["n"], o["D"], o["sigma"], o["delta"],
            kappa=o["kappa"], density_ratio=o["density_ratio"], lambda0=o["lambda0"],
        )
    return LinearField(o["rate"] * np.eye(o["n"]))


def _cmd_simulate(cfg: RunConfig) -> int:
    o = cfg.options
    field = _build_sim_field(o)
    x0 = _parse_point(o["x0"], field.dim)
    sampler = SamplerConfig(
        mode=o["mode"],
        dt=o["dt"],
        t_max=o["t_max"],
        epsilon_fixed=o["epsilon"],
        epsilon_req=o["epsilon_req"],
        lambda_thresh=o["lambda_thresh"],
        M=o["M"],
        divergence_mode=o["divergence"],
        det_floor=o["det_floor"],
        track_exact_shadow=bool(o["shadow"]),
    )
    record = run_flow(field, x0, sampler, seed=cfg.seed)
    terminal = ",".join(f"{v:.17g}" for v in record.terminal_state)
    print(f"survived,{int(record.survived)}")
    print(f"survival_time,{record.survival_time:.17g}")
    print(f"triggered,{int(record.triggered)}")
    if record.triggered:
        print(f"trigger_time,{record.trigger_time:.17g}")
    print(f"logJ_final,{record.logJ[-1]:.17g}")
    print(f"terminal,{terminal}")
    out = cfg.out_dir
    if out is not None:
        for path in emit_report(record, out, formats=cfg.formats):
            print(f"wrote {path}")
    return 0


def _flatten_stat(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _cmd_experiment(cfg: RunConfig) -> int:
    o = cfg.options
    spec = ExperimentSpec(kind=o["kind"], master_seed=cfg.seed, params=o["params"] or {})
    report = run_experiment(spec)
    for name, value in report.stats.items():
        print(f"{name},{_flatten_stat(value)}")
    out = cfg.out_dir
    if out is not None:
        for path in emit_report(report, out, formats=cfg.formats):
            print(f"wrote {path}")
    return 0


def _cmd_ingest(cfg: RunConfig) -> int:
    o = cfg.options
    if not o["cloud"]:
        raise UsageError("ingest-check requires --cloud PATH")
    cloud = ingest_pointcloud(o["cloud"], dim=o["dim"])
    print(f"points,{cloud.points.shape[0]}")
    print(f"dim,{cloud.dim}")
    print(f"bandwidth,{cloud.bandwidth:.17g}")
    print(f"labelled,{int(cloud.labels is not None)}")
    return 0


_COMMANDS = {
    "bounds": _cmd_bounds,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "ingest-check": _cmd_ingest,
}


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return _COMMANDS[cfg.command](cfg)
    except CausalHorizonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
