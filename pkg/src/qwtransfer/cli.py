"""Batch command-line front end.

Every command takes an optional JSON config file; explicit flags override
its values.  Results are computed in full before anything is written, and
each file is written atomically, so a failed run leaves no partial output.

Exit codes: 0 success, 2 configuration error, 3 numeric/runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .entanglement import entanglement_curve
from .errors import QWTransferError
from .hilbert import LABELS, StateLike, as_ensemble, make_bell_initial, make_werner_initial, werner_visibility_for
from .remote import (
    THEORIES,
    ConditioningScan,
    DephasedBellSpec,
    default_grid,
    run_scan,
)
from .tomography import cell_seed, tomography_pipeline
from .walk import ORDERS, WalkConfig, iter_evolution, position_distribution

log = logging.getLogger("qwtransfer")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
COMMANDS = ("evolve", "entanglement", "remote-scan", "tomography")
INPUTS = ("ideal", "werner", "both")
DEFAULT_VISIBILITY = werner_visibility_for(0.6488)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    steps: int
    visibility: float = DEFAULT_VISIBILITY
    entangled_weight: float = 0.8
    theta_classical: float = 0.0  # degrees
    grid_deg: float = 2.0
    shots: int | None = 10**6
    seed: int | None = None
    exact: bool = False
    input: str = "ideal"
    order: str = "coin_first"
    out: str = "out"
    format: str = "csv"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.steps, int) or isinstance(self.steps, bool) or self.steps < 0:
            raise ConfigError(f"steps must be a nonnegative integer, got {self.steps!r}")
        if not 0 <= self.visibility <= 1:
            raise ConfigError(f"visibility must lie in [0, 1], got {self.visibility!r}")
        if not 0 <= self.entangled_weight <= 1:
            raise ConfigError(f"entangled weight must lie in [0, 1], got {self.entangled_weight!r}")
        if not math.isfinite(self.theta_classical):
            raise ConfigError("theta-classical must be finite")
        if not 0 < self.grid_deg <= 180:
            raise ConfigError(f"grid-deg must lie in (0, 180], got {self.grid_deg!r}")
        if self.input not in INPUTS:
            raise ConfigError(f"input must be one of {INPUTS}, got {self.input!r}")
        if self.order not in ORDERS:
            raise ConfigError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.command == "tomography" and not self.exact:
            if self.shots is None or self.shots <= 0:
                raise ConfigError("shots must be a positive integer")
            if self.seed is None:
                raise ConfigError("a seed is required for sampled tomography (or pass --exact)")
        return self


COMMAND_DEFAULTS = {
    "evolve": {"steps": 10},
    "entanglement": {"steps": 10},
    "remote-scan": {"steps": 3, "order": "shift_first"},
    "tomography": {"steps": 10},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwtransfer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with parameter values")
        p.add_argument("--steps", type=int)
        p.add_argument("--visibility", type=float, help="Werner visibility of the initial pair")
        weight = p.add_mutually_exclusive_group()
        weight.add_argument("--entangled-weight", type=float)
        weight.add_argument("--classical-weight", type=float, help="alias: 1 - entangled weight")
        p.add_argument("--theta-classical", type=float, help="dephasing basis of the mixed run, degrees")
        p.add_argument("--grid-deg", type=float, help="angle grid resolution, degrees")
        p.add_argument("--shots", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--exact", action="store_true", default=None, help="infinite-count tomography")
        p.add_argument("--input", choices=INPUTS)
        p.add_argument("--order", choices=ORDERS, help="walk step ordering")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"))
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    values = dict(COMMAND_DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update(_normalize_keys(file_values))

    flags = {k: v for k, v in vars(args).items() if v is not None}
    flags.pop("config", None)
    flags.pop("verbose", None)
    values.update(flags)
    values["command"] = args.command

    if "classical_weight" in values:
        if "entangled_weight" in flags:
            values.pop("classical_weight")
        else:
            values["entangled_weight"] = 1 - float(values.pop("classical_weight"))

    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return RunConfig(**values).validate()


def _normalize_keys(values: dict) -> dict:
    return {str(k).replace("-", "_"): v for k, v in values.items()}


# -- serialization -----------------------------------------------------------

def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def render_table(header: list[str], rows: list[tuple], kind: str) -> str:
    if kind == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()
    records = [dict(zip(header, row)) for row in rows]
    return render_json({"columns": header, "rows": records})


def render_json(payload) -> str:
    return json.dumps(_json_value(payload), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- commands ----------------------------------------------------------------

def _initials(cfg: RunConfig) -> list[tuple[str, StateLike]]:
    out = []
    if cfg.input in ("ideal", "both"):
        out.append(("ideal", make_bell_initial()))
    if cfg.input in ("werner", "both"):
        out.append(("werner", make_werner_initial(cfg.visibility)))
    return out


def _amplitude_key(item):
    (a, c, x), _ = item
    return x, a, c


def cmd_evolve(cfg: RunConfig) -> dict[str, str]:
    header = ["input", "step", "position", "probability"]
    rows, dumps = [], {}
    for name, initial in _initials(cfg):
        config = WalkConfig(cfg.steps, order=cfg.order)
        steps = []
        for t, state in iter_evolution(initial, config):
            dist = position_distribution(state)
            rows.extend((name, t, x, p) for x, p in dist.as_dict().items())
            steps.append({
                "step": t,
                "branches": [
                    {
                        "weight": w,
                        "amplitudes": [
                            {"alice": a, "coin": c, "position": x, "re": amp.real, "im": amp.imag}
                            for (a, c, x), amp in sorted(s.amplitudes.items(), key=_amplitude_key)
                        ],
                    }
                    for w, s in as_ensemble(state)
                ],
            })
        dumps[name] = steps
    return {
        f"evolve_distribution.{cfg.format}": render_table(header, rows, cfg.format),
        "evolve_amplitudes.json": render_json({"order": cfg.order, "inputs": dumps}),
    }


def cmd_entanglement(cfg: RunConfig) -> dict[str, str]:
    header = ["input", "step", "e_avg", "e_normalized", "position", "probability", "entanglement", "purity", "flagged"]
    rows = []
    for name, initial in _initials(cfg):
        curve = entanglement_curve(initial, WalkConfig(cfg.steps, order=cfg.order))
        for rec in curve.records:
            for p in rec.positions:
                rows.append((name, rec.step, rec.e_avg, rec.e_normalized,
                             p.position, p.probability, p.entanglement, p.purity, p.flagged))
    return {f"entanglement.{cfg.format}": render_table(header, rows, cfg.format)}


def remote_scenarios(cfg: RunConfig) -> list[tuple[str, ConditioningScan]]:
    grid = default_grid(cfg.grid_deg)
    mixed_ref = DephasedBellSpec(np.deg2rad(cfg.theta_classical), "mixed_reference")
    runs = [("entangled", ConditioningScan(grid, grid, cfg.steps, 1.0, THEORIES[0], cfg.order))]
    runs += [(spec.name, ConditioningScan(grid, grid, cfg.steps, 0.0, spec, cfg.order)) for spec in THEORIES]
    runs.append(("mixed", ConditioningScan(grid, grid, cfg.steps, cfg.entangled_weight, mixed_ref, cfg.order)))
    return runs


def cmd_remote_scan(cfg: RunConfig) -> dict[str, str]:
    header = ["scenario", "entangled_weight", "step", "alpha_deg", "beta_deg", "raw_variance",
              "normalized_variance", "success_probability", "present"]
    initial = make_bell_initial() if cfg.input == "ideal" else make_werner_initial(cfg.visibility)
    degrees = np.arange(0.0, 180.0, cfg.grid_deg)
    rows = []
    for name, scan in remote_scenarios(cfg):
        s = run_scan(scan, initial)
        for k, t in enumerate(s.steps):
            for i, a in enumerate(degrees):
                for j, b in enumerate(degrees):
                    rows.append((name, scan.gamma, t, a, b, s.raw[k, i, j], s.normalized[k, i, j],
                                 s.success[k, i, j], s.present[k, i, j]))
    return {f"remote_scan.{cfg.format}": render_table(header, rows, cfg.format)}


def cmd_tomography(cfg: RunConfig) -> dict[str, str]:
    header = ["input", "step", "position", "probability", "fidelity", "purity", "chsh"]
    rows, densities = [], []
    for name, initial in _initials(cfg):
        config = WalkConfig(cfg.steps, order=cfg.order)
        for t, state in iter_evolution(initial, config):
            for x, _ in position_distribution(state).as_dict().items():
                shots = None if cfg.exact else cfg.shots
                seed = None if cfg.exact else cell_seed(cfg.seed, t, x)
                report = tomography_pipeline(initial, config, x, t, shots, seed)
                rows.append((name, t, x, report.position_probability,
                             report.fidelity_to_truth, report.purity, report.chsh))
                densities.append({
                    "input": name, "step": t, "position": x,
                    "basis": [a + c for a in LABELS for c in LABELS],
                    "re": report.rho_hat.real.tolist(), "im": report.rho_hat.imag.tolist(),
                })
    return {
        f"tomography.{cfg.format}": render_table(header, rows, cfg.format),
        "tomography_densities.json": render_json({"exact": cfg.exact, "seed": cfg.seed, "cells": densities}),
    }


HANDLERS = {
    "evolve": cmd_evolve,
    "entanglement": cmd_entanglement,
    "remote-scan": cmd_remote_scan,
    "tomography": cmd_tomography,
}


def run(cfg: RunConfig) -> list[Path]:
    outputs = HANDLERS[cfg.command](cfg)
    written = []
    for name, text in outputs.items():
        path = Path(cfg.out) / name
        write_atomic(path, text)
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"qwtransfer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in run(cfg):
            log.info("wrote %s", path)
    except (QWTransferError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qwtransfer: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
