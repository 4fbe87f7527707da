"""Command-line front end.

Commands: ``steady``, ``scan``, ``evolve``, ``trajectory``, ``thermal`` and
``trapped``.  Every flag can also be given in a JSON file passed with
``--config``; keys are the flag names without the leading dashes and flags
on the command line win.

CSV output is comma separated with a header row, LF line endings and floats
written with 17 significant digits.  Outputs made of several tables separate
them by one blank line; :func:`read_csv_blocks` reads them back.

Exit codes: 0 success, 2 invalid input, 3 numerical or truncation failure,
4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .core import (
    ConvergenceError,
    DomainError,
    MaserConfig,
    MaserError,
    NumberStateMatrix,
    PhotonDistribution,
    TruncationError,
    decay_rate_from_q,
    statistics,
    thermal_distribution,
    thermal_photon_number,
    total_variation,
)
from .jcm import RabiProfile, effective_rabi_angle
from .master import integrate
from .steady import (
    TRAP_TOL,
    atom_exit_statistics,
    pump_scan,
    steady_state,
    steady_state_report,
    trapped_state_numbers,
)
from .trajectory import (
    EventKind,
    atom_outcome_fraction,
    empirical_distribution,
    one_atom_event_probability,
    simulate,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "omega_ghz": 21.5,
    "nu": 0.0,
    "n_max": 256,
    "seed": 0,
    "format": "csv",
    "length_m": 0.024,
    "speed_m_s": 480.0,
    "rel_tol": 1e-8,
    "samples": 11,
    "levels": 10,
    "initial": "vacuum",
    "burn_in": 0.0,
    "initial_n": 0,
    "tol": TRAP_TOL,
    "axis": "phi",
    "quality_q": 1e9,
}

ALIASES = {"A": "decay_A"}
DEFAULT_TRANSIT_TIME = 50e-6


def fmt(x):
    """Format one CSV cell; floats keep 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def render_csv(blocks):
    buf = io.StringIO()
    for i, (header, rows) in enumerate(blocks):
        if i:
            buf.write("\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _parse_cell(s):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv_blocks(path):
    """Read a CSV file written by the CLI; see :func:`parse_csv_blocks`."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv_blocks(fh.read())


def parse_csv_blocks(text):
    """Parse CLI CSV output into ``[(header, rows), ...]`` with numeric cells converted."""
    blocks = []
    for chunk in text.split("\n\n"):
        lines = [ln for ln in chunk.split("\n") if ln]
        if not lines:
            continue
        reader = csv.reader(lines)
        header = next(reader)
        blocks.append((header, [[_parse_cell(c) for c in row] for row in reader]))
    return blocks


def read_profile_csv(path, length_L, speed_v):
    """Load a Rabi profile from a CSV with columns ``time_s`` and ``g_rad_per_s``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        t = [float(r["time_s"]) for r in rows]
        g = [float(r["g_rad_per_s"]) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"profile {path}: expected numeric columns time_s, g_rad_per_s ({exc})")
    return RabiProfile(t, g, length_L, speed_v)


def _emit(opts, text):
    out = opts.get("out")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _floats(a):
    return [float(x) for x in a]


# -- option resolution --------------------------------------------------------

def _num(opts, key, positive=False, nonneg=False, integer=False):
    v = opts.get(key)
    if v is None:
        return None
    flag = "--" + key.replace("_", "-")
    try:
        v = int(v) if integer and float(v) == int(float(v)) else float(v)
    except (TypeError, ValueError):
        raise DomainError(f"{flag} must be a number, got {v!r}")
    if integer and not isinstance(v, int):
        raise DomainError(f"{flag} must be an integer")
    if isinstance(v, float) and not math.isfinite(v):
        raise DomainError(f"{flag} must be finite")
    if positive and not v > 0:
        raise DomainError(f"{flag} must be > 0")
    if nonneg and not v >= 0:
        raise DomainError(f"{flag} must be >= 0")
    return v


def _omega(opts):
    return 2 * math.pi * _num(opts, "omega_ghz", positive=True) * 1e9


def _nu(opts, omega):
    if opts.get("temperature_k") is not None:
        if "nu" in opts.get("_explicit", ()):
            raise DomainError("give either --nu or --temperature-k, not both")
        return thermal_photon_number(_num(opts, "temperature_k", positive=True), omega)
    return _num(opts, "nu", nonneg=True)


def _phi(opts, required=True):
    if opts.get("profile"):
        if opts.get("phi") is not None:
            raise DomainError("give either --phi or --profile, not both")
        profile = read_profile_csv(opts["profile"], _num(opts, "length_m", positive=True),
                                   _num(opts, "speed_m_s", positive=True))
        return effective_rabi_angle(profile)[1]
    phi = _num(opts, "phi")
    if phi is None:
        if not required:
            return 0.0
        raise DomainError("--phi (rad) or --profile is required")
    return phi


def _rates(opts, omega, need_pump=True):
    r = _num(opts, "pump_rate", nonneg=True)
    A = _num(opts, "decay_A", positive=True)
    ratio = _num(opts, "pump_ratio", nonneg=True)
    if r is not None and A is not None and ratio is not None:
        if not math.isclose(r, ratio * A, rel_tol=1e-12, abs_tol=0.0):
            raise DomainError("--pump-rate, --decay-A and --pump-ratio are inconsistent (r != ratio * A)")
    if A is None:
        if r is not None and ratio is not None:
            if ratio == 0:
                raise DomainError("--pump-ratio 0 cannot determine --decay-A from --pump-rate")
            A = r / ratio
            if not A > 0:
                raise DomainError("--decay-A must be > 0")
        else:
            A = decay_rate_from_q(omega, _num(opts, "quality_q", positive=True))
    if r is None:
        if ratio is None:
            if need_pump:
                raise DomainError("one of --pump-rate (atoms/s) or --pump-ratio (r/A) is required")
            ratio = 0.0
        r = ratio * A
    return r, A


def build_config(opts, need_pump=True):
    omega = _omega(opts)
    nu = _nu(opts, omega)
    r, A = _rates(opts, omega, need_pump)
    phi = _phi(opts, required=r > 0)  # without atoms phi plays no role
    n_max = _num(opts, "n_max", integer=True)
    return MaserConfig(omega=omega, pump_rate_r=r, decay_A=A, nu=nu, phi=phi, n_max=n_max)


def _config_fields(cfg):
    return {
        "omega": cfg.omega,
        "pump_rate_r": cfg.pump_rate_r,
        "decay_A": cfg.decay_A,
        "nu": cfg.nu,
        "phi": cfg.phi,
        "n_max": cfg.n_max,
        "pump_ratio": cfg.pump_ratio,
    }


# -- commands -----------------------------------------------------------------

REPORT_HEADER = ["omega", "pump_rate_r", "decay_A", "nu", "phi", "n_max", "pump_ratio",
                 "n_max_used", "mean", "variance", "mandel_q", "fano", "p_down", "residual",
                 "trapped_below"]


def _report_fields(rep):
    d = _config_fields(rep.config)
    d.update(
        n_max_used=rep.distribution.n_max,
        mean=rep.stats.mean,
        variance=rep.stats.variance,
        mandel_q=rep.stats.mandel_q,
        fano=rep.stats.fano,
        p_down=rep.atom_down_probability,
        residual=rep.detailed_balance_residual,
        trapped_below=rep.trapped_below,
    )
    return d


def cmd_steady(opts):
    cfg = build_config(opts)
    rep = steady_state_report(cfg, trap_tol=_num(opts, "tol", positive=True))
    fields = _report_fields(rep)
    p = rep.distribution.probs
    if opts["format"] == "json":
        _emit(opts, _dump_json({"report": fields, "distribution": _floats(p)}))
    else:
        _emit(opts, render_csv([
            (REPORT_HEADER, [[fields[k] for k in REPORT_HEADER]]),
            (["n", "p"], [[n, x] for n, x in enumerate(p)]),
        ]))
    return EXIT_OK


def _scan_values(opts):
    if opts.get("values") is not None:
        raw = opts["values"]
        items = raw if isinstance(raw, list) else [s for s in str(raw).split(",") if s.strip()]
        try:
            return [float(v) for v in items]
        except ValueError:
            raise DomainError(f"--values must be a comma-separated list of numbers, got {raw!r}")
    if opts.get("range") is not None:
        try:
            start, stop, count = str(opts["range"]).split(":")
            return list(np.linspace(float(start), float(stop), int(count)))
        except ValueError:
            raise DomainError("--range must look like START:STOP:COUNT")
    raise DomainError("--values or --range is required")


def cmd_scan(opts):
    axis = str(opts["axis"]).replace("-", "_")
    if axis not in ("phi", "pump_ratio"):
        raise DomainError("--axis must be 'phi' or 'pump-ratio'")
    values = _scan_values(opts)
    if not values:
        raise DomainError("--values is empty: the scan needs at least one value")
    if axis == "phi" and opts.get("phi") is None and not opts.get("profile"):
        opts = dict(opts, phi=values[0])
    cfg = build_config(opts, need_pump=axis == "phi")
    rows = pump_scan(cfg, axis, values, trap_tol=_num(opts, "tol", positive=True))
    header = ["index", "axis", "value"] + REPORT_HEADER + ["error"]
    table = []
    for i, row in enumerate(rows):
        fields = _report_fields(row.report) if row.report else {}
        table.append([i, axis, row.value] + [fields.get(k) for k in REPORT_HEADER] + [row.error])
    if opts["format"] == "json":
        _emit(opts, _dump_json([dict(zip(header, r)) for r in table]))
    else:
        _emit(opts, render_csv([(header, table)]))
    return EXIT_OK


def _initial_state(text, cfg):
    kind, _, arg = str(text).partition(":")
    if kind == "vacuum":
        return PhotonDistribution.vacuum(cfg.n_max)
    if kind == "thermal":
        return thermal_distribution(cfg.nu, cfg.n_max)
    if kind == "fock":
        try:
            k = int(arg)
        except ValueError:
            raise DomainError("--initial fock:K needs an integer photon number K")
        return PhotonDistribution.fock(k, cfg.n_max)
    if kind == "steady":
        return steady_state(cfg, auto_extend=False)
    if kind == "coherent":
        try:
            alpha = complex(arg.replace(" ", ""))
        except ValueError:
            raise DomainError("--initial coherent:ALPHA needs a complex amplitude, e.g. coherent:1+0.5j")
        return NumberStateMatrix.coherent(alpha, cfg.n_max)
    raise DomainError(f"--initial must be vacuum, thermal, steady, fock:K or coherent:ALPHA, got {text!r}")


def cmd_evolve(opts):
    cfg = build_config(opts)
    duration = _num(opts, "duration", nonneg=True)
    if duration is None:
        raise DomainError("--duration (s) is required")
    samples = _num(opts, "samples", integer=True)
    if samples < 2:
        raise DomainError("--samples must be >= 2")
    levels = _num(opts, "levels", integer=True, nonneg=True)
    initial = _initial_state(opts["initial"], cfg)
    res = integrate(initial, cfg, duration, _num(opts, "rel_tol", positive=True),
                    t_eval=np.linspace(0.0, duration, samples),
                    rotating_frame=bool(opts.get("rotating_frame")))
    k = min(levels, cfg.n_max)
    full = res.mean_field is not None
    if opts["format"] == "json":
        out = {
            "config": _config_fields(cfg),
            "initial": str(opts["initial"]),
            "times": _floats(res.times),
            "mean_n": _floats(res.mean_n),
            "populations": [_floats(row[: k + 1]) for row in res.populations],
            "final_distribution": _floats(np.asarray(res.populations[-1])),
            "steps_taken": res.steps_taken,
            "rejected_steps": res.rejected_steps,
            "trace_drift": res.trace_drift,
        }
        if full:
            out["mean_field_re"] = _floats(res.mean_field.real)
            out["mean_field_im"] = _floats(res.mean_field.imag)
        _emit(opts, _dump_json(out))
    else:
        header = ["t", "mean_n"] + (["mean_field_re", "mean_field_im"] if full else [])
        header += [f"p{n}" for n in range(k + 1)]
        rows = []
        for i, t in enumerate(res.times):
            row = [t, res.mean_n[i]]
            if full:
                row += [res.mean_field[i].real, res.mean_field[i].imag]
            rows.append(row + list(res.populations[i][: k + 1]))
        _emit(opts, render_csv([(header, rows)]))
    return EXIT_OK


def cmd_trajectory(opts):
    atoms = _num(opts, "atoms", integer=True)
    if atoms is None:
        raise DomainError("--atoms is required")
    if atoms < 1:
        raise DomainError("--atoms must be >= 1")
    cfg = build_config(opts)
    if opts.get("transit_time") is not None:
        transit = _num(opts, "transit_time", nonneg=True)
    elif opts.get("profile"):
        transit = _num(opts, "length_m", positive=True) / _num(opts, "speed_m_s", positive=True)
    else:
        transit = DEFAULT_TRANSIT_TIME
    burn_in = _num(opts, "burn_in", nonneg=True)
    seed = _num(opts, "seed", integer=True)
    rec = simulate(cfg, transit, atoms, seed, initial_n=_num(opts, "initial_n", integer=True, nonneg=True),
                   duration=_num(opts, "duration", positive=True))
    summary = {
        "seed": rec.seed,
        "generator": rec.generator,
        **_config_fields(cfg),
        "transit_time": transit,
        "t_end": rec.t_end,
        "burn_in": burn_in,
        "atoms_simulated": rec.atoms_simulated,
        "atoms_down": rec.count(EventKind.atom_exit_down),
        "atoms_up": rec.count(EventKind.atom_exit_up),
        "thermal_jumps_up": rec.count(EventKind.thermal_jump_up),
        "thermal_jumps_down": rec.count(EventKind.thermal_jump_down),
        "collective_event_count": rec.collective_event_count,
        "collective_fraction": rec.collective_event_count / rec.atoms_simulated if rec.atoms_simulated else None,
        "one_atom_event_probability": one_atom_event_probability(cfg.pump_rate_r, transit),
        "p_down": atom_outcome_fraction(rec, burn_in) if rec.atoms_simulated else None,
    }
    emp = empirical_distribution(rec, cfg.n_max, burn_in)
    summary["mean_n"] = statistics(emp).mean
    if opts.get("compare"):
        ss = steady_state(cfg)
        summary["p_down_analytic"] = atom_exit_statistics(ss, cfg.phi)[0]
        summary["tv_distance"] = total_variation(emp.probs, ss.probs)
    if opts.get("events"):
        with open(opts["events"], "w", encoding="utf-8", newline="") as fh:
            fh.write(render_csv([(["time", "kind", "n_after"],
                                  [[t, EventKind(int(k)).name, int(n)]
                                   for t, k, n in zip(rec.times, rec.kinds, rec.n_after)])]))
    if opts["format"] == "json":
        _emit(opts, _dump_json(summary))
    else:
        _emit(opts, render_csv([(list(summary), [list(summary.values())])]))
    return EXIT_OK


def cmd_thermal(opts):
    omega = _omega(opts)
    nu = _nu(opts, omega)
    n_max = _num(opts, "n_max", integer=True)
    dist = thermal_distribution(nu, n_max)
    st = statistics(dist)
    fields = {"temperature_k": _num(opts, "temperature_k"), "omega": omega, "nu": nu,
              "n_max": n_max, "mean": st.mean, "variance": st.variance}
    if opts["format"] == "json":
        _emit(opts, _dump_json({"summary": fields, "distribution": _floats(dist.probs)}))
    else:
        _emit(opts, render_csv([(list(fields), [list(fields.values())]),
                                (["n", "p"], [[n, x] for n, x in enumerate(dist.probs)])]))
    return EXIT_OK


def cmd_trapped(opts):
    phi = _phi(opts)
    rows = trapped_state_numbers(phi, _num(opts, "n_max", integer=True), _num(opts, "tol", positive=True))
    if opts["format"] == "json":
        _emit(opts, _dump_json([{"n": n, "q": q} for n, q in rows]))
    else:
        _emit(opts, render_csv([(["n", "q"], rows)]))
    return EXIT_OK


COMMANDS = {
    "steady": cmd_steady,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
    "trajectory": cmd_trajectory,
    "thermal": cmd_thermal,
    "trapped": cmd_trapped,
}


# -- parser -------------------------------------------------------------------

def _add(p, *flags, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*flags, **kw)


def _physics_flags(p, pump=True):
    g = p.add_argument_group("physical parameters")
    _add(g, "--omega-ghz", type=float, metavar="F",
         help="cavity frequency omega/2pi in GHz (default 21.5)")
    if pump:
        _add(g, "--pump-rate", type=float, metavar="R", help="atom arrival rate r in atoms/s")
        _add(g, "--decay-A", "--A", dest="decay_A", type=float, metavar="A",
             help="photon decay rate A in 1/s (default (omega/2pi)/Q)")
        _add(g, "--quality-q", type=float, metavar="Q",
             help="quality factor used for the default decay rate (default 1e9)")
        _add(g, "--pump-ratio", type=float, metavar="N",
             help="effective pump rate r/A, dimensionless (atoms per photon lifetime)")
    _add(g, "--nu", type=float, help="thermal photon number, dimensionless (default 0)")
    _add(g, "--temperature-k", type=float, metavar="T",
         help="cavity temperature in K; sets nu from the Bose occupancy")


def _phi_flags(p):
    g = p.add_argument_group("Rabi angle")
    _add(g, "--phi", type=float, help="accumulated Rabi angle in rad")
    _add(g, "--profile", metavar="PATH",
         help="CSV with columns time_s (s), g_rad_per_s (rad/s); phi is its integral")
    _add(g, "--length-m", type=float, metavar="L", help="cavity length L in m for --profile (default 0.024)")
    _add(g, "--speed-m-s", type=float, metavar="V", help="atom speed v in m/s for --profile (default 480)")


def _common_flags(p):
    g = p.add_argument_group("output")
    _add(g, "--n-max", type=int, metavar="N", help="Fock-space truncation, photons (default 256)")
    _add(g, "--out", metavar="PATH", help="output file (default stdout)")
    _add(g, "--format", choices=["csv", "json"], help="output format (default csv)")
    _add(g, "--config", metavar="PATH", help="JSON file with default values for any flag")


def build_parser():
    parser = argparse.ArgumentParser(prog="micromaser", description="One-atom maser simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parser.commands = sub.choices

    p = sub.add_parser("steady", help="steady-state photon distribution and report")
    _physics_flags(p)
    _phi_flags(p)
    _add(p, "--tol", type=float, help="trapped-state tolerance in rad (default 1e-9)")
    _common_flags(p)

    p = sub.add_parser("scan", help="steady-state reports along phi or r/A")
    _physics_flags(p)
    _phi_flags(p)
    _add(p, "--axis", choices=["phi", "pump-ratio", "pump_ratio"],
         help="scanned quantity: phi (rad) or pump-ratio (r/A) (default phi)")
    _add(p, "--values", metavar="V1,V2,...", help="comma-separated scan values")
    _add(p, "--range", metavar="START:STOP:COUNT", help="evenly spaced scan values, inclusive")
    _add(p, "--tol", type=float, help="trapped-state tolerance in rad (default 1e-9)")
    _common_flags(p)

    p = sub.add_parser("evolve", help="integrate the master equation in time")
    _physics_flags(p)
    _phi_flags(p)
    _add(p, "--initial", metavar="STATE",
         help="vacuum | thermal | steady | fock:K | coherent:ALPHA (default vacuum)")
    _add(p, "--duration", type=float, metavar="T", help="integration time in s")
    _add(p, "--rel-tol", type=float, help="local error tolerance relative to unit trace (default 1e-8)")
    _add(p, "--samples", type=int, help="number of evenly spaced output times (default 11)")
    _add(p, "--levels", type=int, help="highest photon number printed per row (default 10)")
    _add(p, "--rotating-frame", action="store_true", help="drop the free rotation at omega")
    _common_flags(p)

    p = sub.add_parser("trajectory", help="Monte Carlo simulation of the atom stream")
    _physics_flags(p)
    _phi_flags(p)
    _add(p, "--atoms", type=int, help="number of pump atoms to simulate")
    _add(p, "--transit-time", type=float, metavar="S",
         help="atom transit time L/v in s, for collective-event counting (default 5e-5)")
    _add(p, "--duration", type=float, metavar="T", help="stop after T s (required when r = 0)")
    _add(p, "--initial-n", type=int, metavar="N", help="initial photon number (default 0)")
    _add(p, "--burn-in", type=float, metavar="S", help="discarded initial time in s (default 0)")
    _add(p, "--seed", type=int, help="integer random seed (default 0)")
    _add(p, "--events", metavar="PATH", help="write the event log CSV (time, kind, n_after)")
    _add(p, "--compare", action="store_true",
         help="add p_down and total-variation distance versus the analytic steady state")
    _common_flags(p)

    p = sub.add_parser("thermal", help="thermal photon number and distribution")
    _physics_flags(p, pump=False)
    _common_flags(p)

    p = sub.add_parser("trapped", help="trapped photon numbers for a Rabi angle")
    _phi_flags(p)
    _add(p, "--tol", type=float, help="tolerance on phi sqrt(n+1) - q pi in rad (default 1e-9)")
    _common_flags(p)
    return parser


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except ValueError as exc:
        raise DomainError(f"--config {path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise DomainError(f"--config {path}: expected a JSON object")
    out = {}
    for key, value in data.items():
        dest = key.lstrip("-").replace("-", "_")
        out[ALIASES.get(dest, dest)] = value
    return out


def resolve_options(parser, argv):
    args = parser.parse_args(argv)
    given = {k: v for k, v in vars(args).items() if k != "command"}
    opts = dict(DEFAULTS)
    if given.get("config"):
        cfg = _load_config(given["config"])
        known = {a.dest for a in parser.commands[args.command]._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise DomainError(f"--config: unknown keys {', '.join(unknown)}")
        opts.update(cfg)
        given_keys = set(cfg) | set(given)
    else:
        given_keys = set(given)
    opts.update(given)
    opts["_explicit"] = given_keys
    if opts["format"] not in ("csv", "json"):
        raise DomainError("--format must be csv or json")
    return args.command, opts


def main(argv=None):
    parser = build_parser()
    try:
        command, opts = resolve_options(parser, argv)
        return COMMANDS[command](opts)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    except DomainError as exc:
        print(f"micromaser: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TruncationError, ConvergenceError, MaserError) as exc:
        print(f"micromaser: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"micromaser: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
