"""
Command-line entry point ``nlcflow``.

Subcommands::

    run      --config FILE --out DIR            integrate and write a trajectory
    iterate  --config FILE --iters N --out DIR  trajectory (Picard) iteration
    diagnose --traj DIR --out CSV               recompute diagnostics from snapshots
    compare  --a DIR --b DIR --out CSV          relative energy of a against b

Exit status is 0 on success, 1 on a solver or I/O failure and 2 on a
configuration error; the message goes to standard error and names the error
class (and, for configuration errors, the offending key).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .config import load_config
from .coupling import simulate, trajectory_iteration
from .diagnostics import DiagnosticsRecord, relative_energy
from .errors import ConfigError, IoError, NlcflowError


def _parser():
    ap = argparse.ArgumentParser(prog="nlcflow", description=__doc__.split("\n\n")[0].strip())
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configuration to t_final")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("iterate", help="run N trajectory iterations")
    p.add_argument("--config", required=True)
    p.add_argument("--iters", required=True, type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("diagnose", help="diagnostics CSV from a trajectory directory")
    p.add_argument("--traj", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="relative-energy series between two trajectories")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    return ap


def cmd_run(args):
    cfg = load_config(args.config)
    traj, rec = simulate(cfg)
    io.write_trajectory(args.out, cfg, traj.states, rec)
    e = rec.column("e_total")
    print(
        f"{cfg.n_steps} steps to t={rec.t[-1]:.6g}: e_total {e[0]:.6e} -> {e[-1]:.6e}, "
        f"max picard iterations {max(rec.picard_iters)}"
    )


def cmd_iterate(args):
    cfg = load_config(args.config)
    if args.iters < 1:
        raise ConfigError("iters: must be at least 1", key="iters")
    distances, states = trajectory_iteration(cfg, args.iters, return_trajectories=True)
    rows = []
    for k, dk in enumerate(distances, 1):
        ratio = dk / distances[k - 2] if k > 1 and distances[k - 2] > 0 else float("nan")
        rows.append((k, dk, ratio))
    out = Path(args.out)
    io.write_csv(out / "iterations.csv", ("k", "distance", "ratio"), rows)
    iters = [0] + [args.iters] * (len(states) - 1)
    rec = DiagnosticsRecord.from_states(states, cfg.mu, cfg.lam, cfg.gamma, iters)
    n = len(states) - 1
    kept = [s for i, s in enumerate(states) if i % cfg.sample_stride == 0 or i == n]
    io.write_trajectory(out, cfg, kept, rec)
    for k, dk, ratio in rows:
        print(f"k={k} D={dk:.6e} ratio={ratio:.4g}")


def _picard_counts(directory, cfg, states):
    path = Path(directory) / "diagnostics.csv"
    if not path.exists():
        return None
    columns, rows = io.read_csv(path)
    if "picard_iters" not in columns:
        return None
    col = columns.index("picard_iters")
    by_step = {io.step_index(r[0], cfg.dt): int(r[col]) for r in rows}
    return [by_step.get(io.step_index(s.t, cfg.dt), 0) for s in states]


def cmd_diagnose(args):
    cfg, states = io.read_trajectory(args.traj)
    iters = _picard_counts(args.traj, cfg, states)
    rec = DiagnosticsRecord.from_states(states, cfg.mu, cfg.lam, cfg.gamma, iters)
    io.write_diagnostics(args.out, rec)


def cmd_compare(args):
    cfg_a, sa = io.read_trajectory(args.a)
    cfg_b, sb = io.read_trajectory(args.b)
    by_step = {io.step_index(s.t, cfg_b.dt): s for s in sb}
    rows = []
    for s in sa:
        other = by_step.get(io.step_index(s.t, cfg_a.dt))
        if other is not None and other.t == s.t:
            rows.append((s.t, relative_energy(s, other)))
    if not rows:
        raise IoError(f"{args.a} and {args.b} share no sample times")
    io.write_csv(args.out, ("t", "relative_energy"), rows)


COMMANDS = {"run": cmd_run, "iterate": cmd_iterate, "diagnose": cmd_diagnose, "compare": cmd_compare}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"nlcflow: {type(exc).__name__} [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    except NlcflowError as exc:
        print(f"nlcflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
