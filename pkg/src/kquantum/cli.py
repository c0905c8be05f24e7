"""Command-line driver: ``kquantum {simulate,bounds,qfunction}``.

Exit codes: 0 success, 2 usage error, 3 truncation breach, 4 I/O error.
Flags override values from an optional ``--config`` file of ``key = value``
lines (keys are flag names with or without the leading dashes).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__, bounds, dynamics, io, phasespace, specfun

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BREACH = 3
EXIT_IO = 4

DEFAULT_NMAX = {"exact": 1024, "lamb-dicke": 2048}
DEFAULT_SNAPSHOTS = (0.0, 1.14, 2.29, 3.44, 4.59, 5.74)


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _grid_spec(text):
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("grid is re_min,re_max,im_min,im_max,n_re,n_im")
    try:
        lo_hi = [float(p) for p in parts[:4]]
        counts = [int(p) for p in parts[4:]]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed grid spec {text!r}")
    return tuple(lo_hi), tuple(counts)


def _initial_spec(text):
    kind, _, arg = text.partition(":")
    try:
        if kind == "fock":
            return ("fock", int(arg))
        if kind == "coherent":
            re, im = (float(v) for v in arg.split(","))
            return ("coherent", complex(re, im))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"initial state must be fock:<n> or coherent:<re>,<im>, got {text!r}")


def _add_model_args(p):
    p.add_argument("--k", type=int, default=3, help="quanta exchanged per process")
    p.add_argument("--eta", type=float, default=0.2, help="Lamb-Dicke parameter")


def _add_evolution_args(p):
    _add_model_args(p)
    p.add_argument("--mode", choices=["exact", "lamb-dicke"], default="exact")
    p.add_argument("--kappa-phase", type=float, default=0.0, help="arg(kappa) in radians")
    p.add_argument("--dtau", type=float, default=1e-3)
    p.add_argument("--nmax", type=int, default=None, help="Fock basis size (default depends on mode)")
    p.add_argument("--tail-threshold", type=float, default=1e-8)
    p.add_argument("--initial", type=_initial_spec, default="fock:0")


def build_parser():
    parser = argparse.ArgumentParser(prog="kquantum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate the motional dynamics and write a trajectory CSV")
    sim.add_argument("--config")
    _add_evolution_args(sim)
    sim.add_argument("--tau-end", type=float, default=7.0)
    sim.add_argument("--sample-every", type=int, default=100)
    sim.add_argument("--out", default="trajectory.csv")

    bnd = sub.add_parser("bounds", help="lower/upper bound trajectories and divergence interval")
    bnd.add_argument("--config")
    _add_model_args(bnd)
    bnd.add_argument("--tau-end", type=float, default=7.0)
    bnd.add_argument("--dtau", type=float, default=1e-3)
    bnd.add_argument("--tau1", type=float, default=None, help="start of the divergence interval")
    bnd.add_argument("--sample-every", type=int, default=100)
    bnd.add_argument("--out", default="bounds.csv")

    qf = sub.add_parser("qfunction", help="Husimi Q grids at snapshot times")
    qf.add_argument("--config")
    _add_evolution_args(qf)
    qf.add_argument("--snapshots", type=_float_list, default=",".join(str(t) for t in DEFAULT_SNAPSHOTS))
    lo, hi = phasespace.DEFAULT_BOUNDS[:2], phasespace.DEFAULT_BOUNDS[2:]
    qf.add_argument(
        "--grid",
        type=_grid_spec,
        default="{},{},{},{},{},{}".format(*lo, *hi, *phasespace.DEFAULT_RESOLUTION),
    )
    qf.add_argument("--pgm", action="store_true", help="also write a P2 image per grid")
    qf.add_argument("--out", default="qgrids", help="output directory")
    return parser, {"simulate": sim, "bounds": bnd, "qfunction": qf}


def read_config(path):
    conf = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            conf[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return conf


def parse_args(argv):
    parser, subparsers = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in subparsers:
        try:
            conf = read_config(known.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}")
        sp = subparsers[known.command]
        dests = {a.dest for a in sp._actions}
        unknown = sorted(set(conf) - dests)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**conf)
    return parser.parse_args(argv)


def _validate_evolution(args):
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if not (math.isfinite(args.eta) and args.eta >= 0):
        raise UsageError("--eta must be finite and >= 0")
    if args.mode == "exact" and args.eta == 0:
        raise UsageError("exact mode needs --eta > 0")
    if args.nmax is None:
        args.nmax = DEFAULT_NMAX[args.mode]
    if args.nmax < args.k + 1:
        raise UsageError("--nmax must be at least k+1")
    if not (math.isfinite(args.dtau) and args.dtau > 0):
        raise UsageError("--dtau must be > 0")
    if not (args.tail_threshold > 0):
        raise UsageError("--tail-threshold must be > 0")
    kind, value = args.initial
    if kind == "fock" and not 0 <= value < args.nmax:
        raise UsageError("initial Fock level outside the basis")
    if kind == "coherent" and abs(value) > 30:
        raise UsageError("coherent amplitude must satisfy |alpha| <= 30")


def _initial_state(args):
    kind, value = args.initial
    if kind == "fock":
        return dynamics.fock_state(value, args.nmax)
    return dynamics.coherent_state(value, args.nmax)


def _initial_text(initial):
    kind, value = initial
    if kind == "fock":
        return f"fock:{value}"
    return f"coherent:{fmt(value.real)},{fmt(value.imag)}"


def fmt(x):
    return io.fmt(x)


def _provenance(command, args, keys):
    meta = {"program": f"kquantum {__version__}", "command": command}
    for key in keys:
        value = getattr(args, key)
        if key == "initial":
            value = _initial_text(value)
        elif key == "grid":
            value = ",".join(fmt(v) for v in value[0]) + "," + ",".join(str(v) for v in value[1])
        elif key == "snapshots":
            value = ",".join(fmt(v) for v in value)
        elif isinstance(value, float):
            value = fmt(value)
        meta[key.replace("_", "-")] = value
    return meta


def _config(args):
    return dynamics.ModelConfig(args.k, args.eta, args.mode, args.kappa_phase)


def cmd_simulate(args):
    _validate_evolution(args)
    if not (math.isfinite(args.tau_end) and args.tau_end >= 0):
        raise UsageError("--tau-end must be >= 0")
    if args.sample_every < 1:
        raise UsageError("--sample-every must be >= 1")
    cfg = _config(args)
    meta = _provenance(
        "simulate",
        args,
        ["k", "eta", "mode", "kappa_phase", "tau_end", "dtau", "nmax", "sample_every", "tail_threshold", "initial"],
    )
    status = EXIT_OK
    try:
        traj = dynamics.evolve(
            _initial_state(args),
            cfg,
            args.tau_end,
            args.dtau,
            args.sample_every,
            tail_threshold=args.tail_threshold,
        )
        meta["truncation_breach"] = "false"
    except dynamics.TruncationBreach as exc:
        traj = exc.trajectory
        meta["truncation_breach"] = "true"
        meta["breach_tau"] = fmt(exc.tau)
        log.warning("truncation breach at tau=%.6g; increase --nmax", exc.tau)
        status = EXIT_BREACH
    io.write_trajectory(args.out, traj, meta)
    return status


def cmd_bounds(args):
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if not (math.isfinite(args.eta) and args.eta > 0):
        raise UsageError("--eta must be > 0 for the upper bound")
    if not (math.isfinite(args.tau_end) and args.tau_end >= 0):
        raise UsageError("--tau-end must be >= 0")
    if not (math.isfinite(args.dtau) and args.dtau > 0):
        raise UsageError("--dtau must be > 0")
    if args.tau1 is not None and not args.tau1 > 0:
        raise UsageError("--tau1 must be > 0")
    if args.sample_every < 1:
        raise UsageError("--sample-every must be >= 1")
    problem = bounds.BoundProblem.ground_state(args.k)
    lower = bounds.solve_lower_bound(problem, args.tau_end, args.dtau)
    try:
        estimate = bounds.divergence_time(problem, args.tau1, args.dtau)
    except ValueError as exc:
        raise UsageError(str(exc))
    upper = bounds.solve_upper_bound(problem.n0, problem.n0p, args.k, args.eta)

    keep = np.arange(0, len(lower.tau), args.sample_every)
    if keep[-1] != len(lower.tau) - 1:
        keep = np.append(keep, len(lower.tau) - 1)
    tau = lower.tau[keep]
    meta = _provenance("bounds", args, ["k", "eta", "tau_end", "dtau", "sample_every"])
    meta.update(
        {
            "tau1": fmt(estimate.tau1),
            "n_at_tau1": fmt(estimate.n_at_tau1),
            "dtau_inf_upper": fmt(estimate.dtau_inf_upper),
            "dtau_inf_quadrature": fmt(estimate.dtau_inf_quadrature),
            "C_k": fmt(specfun.bound_constant(args.k, args.eta)),
            "lb_blowup_tau": fmt(lower.blowup_tau) if lower.blew_up else "none",
        }
    )
    io.write_bounds_report(args.out, tau, lower.n[keep], upper(tau), meta)
    return EXIT_OK


def snapshot_filename(index, tau):
    return f"q_{index:02d}_tau{tau:g}"


def cmd_qfunction(args):
    _validate_evolution(args)
    snaps = sorted(args.snapshots)
    if not snaps or snaps[0] < 0 or not all(math.isfinite(t) for t in snaps):
        raise UsageError("--snapshots must be non-negative finite times")
    (re_min, re_max, im_min, im_max), (n_re, n_im) = args.grid
    if not (re_max > re_min and im_max > im_min and n_re >= 2 and n_im >= 2):
        raise UsageError("--grid needs increasing bounds and >= 2 points per axis")
    if max(abs(re_min), abs(re_max), abs(im_min), abs(im_max)) > 30:
        raise UsageError("--grid must stay within |alpha| <= 30")
    cfg = _config(args)
    base_meta = _provenance(
        "qfunction",
        args,
        ["k", "eta", "mode", "kappa_phase", "dtau", "nmax", "tail_threshold", "initial", "snapshots", "grid"],
    )
    os.makedirs(args.out, exist_ok=True)
    state = _initial_state(args)
    tables = dynamics.CouplingTables.build(cfg, args.nmax)
    for i, tau in enumerate(snaps):
        try:
            state = dynamics.evolve_to(state, cfg, tau, args.dtau, tables=tables, tail_threshold=args.tail_threshold)
        except dynamics.TruncationBreach as exc:
            log.warning("truncation breach at tau=%.6g before snapshot %g; increase --nmax", exc.tau, tau)
            return EXIT_BREACH
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            grid = phasespace.q_on_grid(state, args.grid[0], args.grid[1])
        if not grid.normalized_ok:
            log.warning("snapshot tau=%g: grid normalization %.4f; widen --grid", tau, grid.normalization())
        meta = dict(base_meta)
        meta.update({"tau": fmt(tau), "normalization": fmt(grid.normalization()),
                     "normalized_ok": str(grid.normalized_ok).lower()})
        stem = os.path.join(args.out, snapshot_filename(i, tau))
        io.write_qgrid(stem + ".csv", grid, meta)
        if args.pgm:
            io.write_pgm(stem + ".pgm", grid)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "qfunction": cmd_qfunction}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kquantum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kquantum: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
