"""Command-line front end.

Every command writes a table as CSV (with ``#`` metadata lines on top) or as
a JSON document ``{"metadata": ..., "rows": [...], ...}``. The metadata
carries the tool version and the full argument list, enough to re-run the
command. Exit codes: 0 success, 2 invalid configuration, 3 infeasible
synthesis.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .expsim import (ExperimentConfig, Prep, calibrate_sigma_for_q, dark_locus, fingerpinch,
                     noiseless_frequency, time_domain_trace)
from .model import (Connectivity, HubbardParams, at_sweet_spot, exchange_gradient,
                    hubbard_exchange, sweet_spot)
from .noise import DEFAULT_SHOTS, DEFAULT_SIGMA_GRID, NoiseModel, fidelity_sweep, x_gate_schedules
from .pulsekit import QUBIT_A, Schedule, evolve_effective
from .synth import (CATALOG_GATES, STANDARD_GATES, SUBSEQUENCES, catalog_averages, catalog_rows,
                    gate_catalog, gate_spec, schedule_fidelity, subsequence_rows, synthesize,
                    synthesize_sequential)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

TOOL = "eosim"

OUTPUT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["metadata", "rows"],
    "properties": {
        "metadata": {
            "type": "object",
            "required": ["tool", "version", "command", "argv", "config"],
            "properties": {
                "tool": {"const": TOOL},
                "version": {"type": "string"},
                "command": {"type": "string"},
                "argv": {"type": "array", "items": {"type": "string"}},
                "config": {"type": "object"},
            },
        },
        "rows": {"type": "array", "items": {"type": "object"}},
    },
}


class ConfigError(ValueError):
    """Invalid command-line configuration (exit code 2)."""


# -- argument parsing helpers -----------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise ConfigError("empty list")
    return values


def _range_spec(text: str) -> tuple[float, int]:
    """``MAX:N`` -> (MAX, N)."""
    try:
        hi, n = text.split(":")
        hi, n = float(hi), int(n)
    except ValueError:
        raise ConfigError(f"expected MAX:N, got {text!r}") from None
    if not hi > 0 or n < 2:
        raise ConfigError(f"range {text!r} needs MAX > 0 and N >= 2")
    return hi, n


def _triple(text: str, name: str) -> tuple[float, float, float]:
    values = _float_list(text)
    if len(values) == 1:
        values = values * 3
    if len(values) != 3:
        raise ConfigError(f"--{name} takes one value or three (12, 23, 13)")
    return tuple(values)


def _sequence_spec(text: str):
    """``nzn:0.5,0.5,0.5`` (angles in units of pi)."""
    try:
        pattern, angles = text.split(":")
    except ValueError:
        raise ConfigError(f"expected PATTERN:T1,T2,T3, got {text!r}") from None
    thetas = tuple(math.pi * a for a in _float_list(angles))
    if pattern not in ("nzn", "znz") or len(thetas) != 3:
        raise ConfigError(f"bad subsequence {text!r}")
    return thetas, pattern


# -- output -----------------------------------------------------------------------------

def _clean(value):
    """Plain-Python, JSON-safe copy (numpy scalars unwrapped, inf/nan -> None)."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def _metadata(args, argv) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {"tool": TOOL, "version": __version__, "command": args.command,
            "argv": list(argv), "config": _clean(config)}


def render(metadata: dict, rows: list[dict], fmt: str, extras: dict | None = None) -> str:
    extras = _clean(extras or {})
    rows = _clean(rows)
    if fmt == "json":
        return json.dumps({"metadata": metadata, "rows": rows, **extras}, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# {TOOL} {metadata['version']}\n")
    buf.write(f"# metadata: {json.dumps(metadata, sort_keys=True)}\n")
    for key, value in extras.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    fields = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    writer = csv.DictWriter(buf, fieldnames=fields, restval="", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else json.dumps(v) if isinstance(v, (list, dict))
                             else v) for k, v in row.items()})
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a CSV written by this tool into (metadata, rows of strings)."""
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("# ") and ": " in line and not body:
            key, value = line[2:].split(": ", 1)
            meta[key] = json.loads(value)
        elif not line.startswith("#"):
            body.append(line)
    return meta, list(csv.DictReader(body))


# -- commands ---------------------------------------------------------------------------

def cmd_gate_table(args):
    gates = args.gates.split(",") if args.gates else CATALOG_GATES
    unknown = [g for g in gates if g not in STANDARD_GATES]
    if unknown:
        raise ConfigError(f"unknown gates: {', '.join(unknown)}")
    entries = gate_catalog(args.jmax, args.tau_idle, gates, args.max_pulses)
    rows = catalog_rows(entries)
    extras = {}
    if any(e.gate.name != "I" for e in entries):
        averages = catalog_averages(entries)
        extras["averages_ns"] = averages
        rows += [{"gate": "average", "strategy": k, "wall_clock_ns": v}
                 for k, v in averages.items()]
    return rows, extras, EXIT_OK


def cmd_subsequences(args):
    sequences = [_sequence_spec(s) for s in args.sequence] if args.sequence else SUBSEQUENCES
    return subsequence_rows(args.jmax, args.tau_idle, sequences), {}, EXIT_OK


def cmd_noise_sweep(args):
    grid = _float_list(args.grid) if args.grid else list(DEFAULT_SIGMA_GRID)
    if any(s < 0 for s in grid):
        raise ConfigError("noise levels must be >= 0")
    if args.shots < 2:
        raise ConfigError("--shots must be at least 2")
    target = gate_spec("X")
    rows = []
    for scheme, sched in x_gate_schedules(args.jmax).items():
        result = fidelity_sweep(sched.with_idle(args.tau_idle), target, grid, grid,
                                args.shots, args.seed, scheme=scheme)
        rows += result.rows()
    return rows, {}, EXIT_OK


def _noise(sigma_z: float, sigma_n: float, seed: int):
    if sigma_z < 0 or sigma_n < 0:
        raise ConfigError("noise levels must be >= 0")
    if sigma_z == 0 and sigma_n == 0:
        return None
    return NoiseModel({QUBIT_A.z_bond: sigma_z, QUBIT_A.n_bond: sigma_n}, seed)


def cmd_fingerpinch(args):
    zmax, nz, nmax, nn = 0.1, 41, 0.2, 81
    if args.grid:
        parts = args.grid.split(",")
        if len(parts) != 2:
            raise ConfigError("--grid for fingerpinch is ZMAX:NZ,NMAX:NN")
        (zmax, nz), (nmax, nn) = _range_spec(parts[0]), _range_spec(parts[1])
    if args.echo_repeats % 2:
        raise ConfigError("--echo-repeats must be even so that the echo pulses cancel")
    config = ExperimentConfig(prep=args.prep, pulse_time=args.pulse_time,
                              z_values=np.linspace(0.0, zmax, nz),
                              n_values=np.linspace(0.0, nmax, nn),
                              echo_repeats=args.echo_repeats,
                              noise=_noise(args.sigma, args.sigma, args.seed),
                              shots=args.shots, J_max=args.jmax)
    result = fingerpinch(config)
    _, _, slope = dark_locus(result, min_z=0.1 * zmax)
    return result.rows(), {"experiment": config.metadata(), "dark_locus_slope": slope}, EXIT_OK


def cmd_time_domain(args):
    tmax, n = _range_spec(args.grid) if args.grid else (1500.0, 400)
    if args.jz < 0 or args.jn < 0:
        raise ConfigError("exchange amplitudes must be >= 0")
    extras = {}
    if args.target_q is not None:
        if args.target_q <= 0:
            raise ConfigError("--target-q must be positive")
        sigma, trace = calibrate_sigma_for_q(args.target_q, args.jz, args.jn, t_max=tmax,
                                             n_points=n, shots=args.shots, seed=args.seed)
        extras["calibrated_sigma"] = sigma
    else:
        trace = time_domain_trace(args.prep, args.jz, args.jn, tmax, n,
                                  _noise(args.sigma_z, args.sigma, args.seed), args.shots,
                                  args.jmax)
    fit = trace.fit
    extras["fit"] = {"frequency": fit.frequency, "decay_time": fit.decay_time,
                     "amplitude": fit.amplitude, "offset": fit.offset, "phase": fit.phase,
                     "residual": fit.residual, "oscillating": fit.oscillating,
                     "quality_factor": trace.quality_factor}
    extras["noiseless_frequency"] = noiseless_frequency(args.jz, args.jn)
    return trace.rows(), extras, EXIT_OK


BOND_NAMES = ("1-2", "2-3", "1-3")


def _gradient_rows(point: str, p: HubbardParams) -> list[dict]:
    J = hubbard_exchange(p)
    grad = exchange_gradient(p)
    scale = p.energy_scale
    own = ((0, 1), (1, 2), (0, 2))
    rows = []
    for b, name in enumerate(BOND_NAMES):
        for k in range(3):
            g = grad[b, k]
            rows.append({"point": point, "bond": name, "site": k + 1, "J": J[b],
                         "dJ_deps": g, "relative": abs(g) * scale / J[b] if J[b] else 0.0,
                         "own_site": k in own[b]})
    return rows


def cmd_sweet_spot(args):
    U, V, t = _triple(args.U, "U"), _triple(args.V, "V"), _triple(args.t, "t")
    if min(t) <= 0:
        raise ConfigError("tunnel couplings must be positive")
    try:
        base = HubbardParams((0.0, 0.0, 0.0), U, V, t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    d2, d3 = sweet_spot(base)
    sweet = at_sweet_spot(base)
    scale = base.energy_scale
    generic = sweet.with_eps(np.add(sweet.eps, (0.0, args.offset * scale, 2.5 * args.offset * scale)))
    rows = _gradient_rows("sweet_spot", sweet) + _gradient_rows("generic", generic)
    flat = max(r["relative"] for r in rows if r["point"] == "sweet_spot")
    steep = min(r["relative"] for r in rows if r["point"] == "generic" and r["own_site"])
    extras = {"detunings": {"eps2_minus_eps1": d2, "eps3_minus_eps1": d3},
              "max_relative_gradient_at_sweet_spot": flat,
              "min_relative_gradient_at_generic_point": steep,
              "sweet_spot_ok": flat <= 1e-6, "generic_ok": steep >= 1e-2}
    return rows, extras, EXIT_OK


def _schedule_rows(schedule: Schedule) -> list[dict]:
    return [{"segment": k, **{f"J{b.replace('-', '')}": seg.J_values.get(
                tuple(int(x) for x in b.split("-")), 0.0) for b in BOND_NAMES},
             "duration_ns": seg.duration}
            for k, seg in enumerate(schedule.segments)]


def cmd_synth(args):
    if args.gate not in STANDARD_GATES:
        raise ConfigError(f"unknown gate {args.gate!r}; choose from {', '.join(STANDARD_GATES)}")
    if args.max_pulses < 1:
        raise ConfigError("--max-pulses must be >= 1")
    spec = gate_spec(args.gate)
    if args.sequential:
        res = synthesize_sequential(spec, min(args.max_pulses, 4), args.jmax, args.tau_idle)
    else:
        res = synthesize(spec, args.connectivity, args.max_pulses, args.jmax, args.tau_idle)
    summary = {"gate": res.name or args.gate, "strategy": res.strategy, "feasible": res.feasible,
               "reason": res.reason}
    if not res.feasible:
        return [], {"result": summary}, EXIT_INFEASIBLE
    summary.update(pulses=res.pulse_count, pulse_time_ns=res.schedule.pulse_time,
                   wall_clock_ns=res.wall_clock, fidelity=res.achieved_fidelity,
                   leakage_phase=res.leakage_phase)
    if args.schedule_out:
        Path(args.schedule_out).write_text(res.schedule.to_json(indent=2) + "\n")
    return _schedule_rows(res.schedule), {"result": summary,
                                          "schedule": res.schedule.to_dict()}, EXIT_OK


def cmd_evolve(args):
    try:
        schedule = Schedule.from_json(Path(args.schedule).read_text())
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read schedule: {exc}") from None
    if args.tau_idle:
        schedule = schedule.with_idle(args.tau_idle)
    eff = evolve_effective(schedule)
    extras = {"pulse_time_ns": schedule.pulse_time, "wall_clock_ns": schedule.wall_clock,
              "leakage_phase": eff.leakage_phase,
              "qubit_unitary": {"real": eff.su2.real, "imag": eff.su2.imag}}
    if args.gate:
        if args.gate not in STANDARD_GATES:
            raise ConfigError(f"unknown gate {args.gate!r}")
        extras["fidelity"] = schedule_fidelity(schedule, gate_spec(args.gate).target_su2)
    return _schedule_rows(schedule), extras, EXIT_OK


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jmax", type=float, default=0.1, help="exchange limit J_max (rad/ns)")
    common.add_argument("--tau-idle", type=float, default=0.0, help="idle time per pulse (ns)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gate-table", parents=[common],
                       help="sequential vs simultaneous gate catalog with average times")
    p.add_argument("--gates", help="comma-separated gate names (default: full catalog)")
    p.add_argument("--max-pulses", type=int, default=3)
    p.set_defaults(func=cmd_gate_table)

    p = sub.add_parser("subsequences", parents=[common],
                       help="three-pulse subsequences and their simultaneous replacements")
    p.add_argument("--sequence", action="append",
                   help="PATTERN:T1,T2,T3 with angles in units of pi, e.g. nzn:0.5,0.5,0.5")
    p.set_defaults(func=cmd_subsequences)

    p = sub.add_parser("noise-sweep", parents=[common],
                       help="X gate fidelity under quasi-static exchange noise")
    p.add_argument("--grid", help="comma-separated relative sigmas for both bonds")
    p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("fingerpinch", parents=[common], help="1 - P(ground) map over (J12, J23)")
    p.add_argument("--grid", help="ZMAX:NZ,NMAX:NN in rad/ns (default 0.1:41,0.2:81)")
    p.add_argument("--prep", choices=("singlet", "x"), default="x",
                   help="x (default) shows the dark J23 = 2 J12 line")
    p.add_argument("--pulse-time", type=float, default=100.0, help="ns")
    p.add_argument("--echo-repeats", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0, help="relative noise on J12 and J23")
    p.add_argument("--shots", type=int, default=200)
    p.set_defaults(func=cmd_fingerpinch)

    p = sub.add_parser("time-domain", parents=[common],
                       help="ground probability versus pulse length with a damped fit")
    p.add_argument("--grid", help="TMAX:N in ns (default 1500:400)")
    p.add_argument("--prep", choices=("singlet", "x"), default="singlet")
    p.add_argument("--jz", type=float, default=0.0, help="J12 (rad/ns)")
    p.add_argument("--jn", type=float, default=0.213, help="J23 (rad/ns)")
    p.add_argument("--sigma", type=float, default=0.0, help="relative noise on J23")
    p.add_argument("--sigma-z", type=float, default=0.0, help="relative noise on J12")
    p.add_argument("--target-q", type=float, help="calibrate the J23 noise to this quality factor")
    p.add_argument("--shots", type=int, default=2000)
    p.set_defaults(func=cmd_time_domain)

    p = sub.add_parser("sweet-spot", parents=[common],
                       help="Hubbard sweet-spot detunings with a finite-difference check")
    p.add_argument("--U", default="1.0", help="charging energies (one or three values)")
    p.add_argument("--V", default="0.2", help="cross charging (12, 23, 13)")
    p.add_argument("--t", default="0.05", help="tunnel couplings (12, 23, 13)")
    p.add_argument("--offset", type=float, default=0.1,
                   help="detuning of the generic comparison point, in units of mean U")
    p.set_defaults(func=cmd_sweet_spot)

    p = sub.add_parser("synth", parents=[common], help="synthesize one gate")
    p.add_argument("--gate", required=True)
    p.add_argument("--connectivity", choices=("linear", "all"), default="linear")
    p.add_argument("--sequential", action="store_true",
                   help="single-coupling pulses only (ignores --connectivity)")
    p.add_argument("--max-pulses", type=int, default=2)
    p.add_argument("--schedule-out", help="also write the schedule JSON here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evolve", parents=[common], help="qubit action of a schedule JSON file")
    p.add_argument("--schedule", required=True)
    p.add_argument("--gate", help="report the fidelity against this gate")
    p.set_defaults(func=cmd_evolve)
    return parser


def _validate_common(args):
    if not (args.jmax > 0 and math.isfinite(args.jmax)):
        raise ConfigError("--jmax must be positive")
    if not (args.tau_idle >= 0 and math.isfinite(args.tau_idle)):
        raise ConfigError("--tau-idle must be >= 0")
    if getattr(args, "connectivity", None):
        args.connectivity = Connectivity.parse(args.connectivity).value
    if getattr(args, "prep", None):
        args.prep = Prep.parse(args.prep).value


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate_common(args)
        rows, extras, code = args.func(args)
    except ValueError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(_metadata(args, argv), rows, args.format, extras)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_INFEASIBLE:
        print(f"{TOOL}: infeasible: {extras['result']['reason']}", file=sys.stderr)
    return code
