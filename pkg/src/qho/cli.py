"""Command-line front end: ``qho <command> --config run.json --out DIR``.

Exit status: 0 success, 1 failed verification check, 2 configuration error,
3 numerical failure (caustic, integrator failure, non-decaying data).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .characteristic import fundamental_solution, solve_characteristic
from .config import MODES, RunConfig
from .errors import CausticError, ConfigError, DomainError, NumericalError
from .observables import arnold_transform, expectation_x, write_trajectory_csv
from .quantum import eigenstate_field, greens, propagated_field
from .superposition import STATE_KEYS, KernelState, ermakov_map, superposition_map
from .verify import FUND_COLUMNS, run_verify, write_fundamental_csv
from .wavefield import WaveField, fmt

logger = logging.getLogger("qho")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _setup_logging():
    level = os.environ.get("QHO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def write_states(path, states: KernelState) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "c0") + STATE_KEYS)
        cols = [np.atleast_1d(getattr(states, k)) for k in ("t",) + STATE_KEYS]
        for row in zip(*cols):
            w.writerow([fmt(row[0]), states.c0, *(fmt(v) for v in row[1:])])
    return path


def _setup(cfg: RunConfig):
    cs = cfg.coefficients()
    char = solve_characteristic(cs, tol=cfg.solver_tol)
    return cs, fundamental_solution(char, cs)


# -- commands -------------------------------------------------------------------

def cmd_solve_fundamental(cfg, out, args):
    _, fund = _setup(cfg)
    t = cfg.grid.t
    fund.char.check_caustic(t)
    write_fundamental_csv(out / "fundamental.csv", fund, t)
    (out / "caustics.json").write_text(json.dumps({"caustics": list(fund.char.caustics)}, indent=2) + "\n")
    if args.plot:
        from .plotting import plot_fundamental
        dense = np.linspace(0.0, fund.char.T, 400)
        plot_fundamental(dense, fund.char.raw(dense), out / "fundamental.png")
    print(f"fundamental solution on {len(t)} times; caustics: {list(fund.char.caustics)}")
    return EXIT_OK


def cmd_eigenstate(cfg, out, args):
    _, fund = _setup(cfg)
    t = cfg.grid.t
    field = eigenstate_field(cfg.n, fund, cfg.initial, cfg.grid.x, t, threads=args.threads)
    field.to_csv(out / "eigenstate.csv")
    write_states(out / "states.csv", ermakov_map(fund, cfg.initial, t))
    if args.plot:
        from .plotting import plot_density
        plot_density(field, out / "eigenstate.png", f"n = {cfg.n}")
    print(f"eigenstate n={cfg.n}: {len(t)} x {len(cfg.grid.x)} samples")
    return EXIT_OK


def cmd_propagate(cfg, out, args):
    source = args.input or cfg.input
    if source is None:
        raise ConfigError("propagate needs an input CSV (config key 'input' or --input)")
    path = Path(source)
    if args.input is None and not path.is_absolute():
        path = cfg.base_dir / path
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    initial = WaveField.from_csv(path)
    _, fund = _setup(cfg)
    field = propagated_field(fund, initial.slice(0), cfg.grid.x, cfg.grid.t, threads=args.threads)
    field.to_csv(out / "propagated.csv")
    if args.plot:
        from .plotting import plot_density
        plot_density(field, out / "propagated.png", "propagated")
    print(f"propagated {path.name} to {len(cfg.grid.t)} times")
    return EXIT_OK


def cmd_greens(cfg, out, args):
    _, fund = _setup(cfg)
    times = cfg.greens_t or [cfg.grid.t_max]
    y = np.linspace(*cfg.greens_y)
    x = cfg.grid.x
    fund.char.check_caustic(times)
    with open(out / "greens.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "re_G", "im_G"])
        for t in times:
            G = greens(fund, x[:, None], y[None, :], t)
            for i, xi in enumerate(x):
                for j, yj in enumerate(y):
                    w.writerow([fmt(t), fmt(xi), fmt(yj), fmt(G[i, j].real), fmt(G[i, j].imag)])
            if args.plot:
                from .plotting import plot_greens
                plot_greens(x, y, G, t, out / f"greens_t{t:.6g}.png")
    print(f"Green's function at t = {', '.join(f'{t:g}' for t in times)}")
    return EXIT_OK


def cmd_observables(cfg, out, args):
    from .quantum import support_grid

    _, fund = _setup(cfg)
    t = cfg.grid.t
    if cfg.input is not None:
        initial = WaveField.from_csv(cfg.base_dir / cfg.input if not Path(cfg.input).is_absolute() else cfg.input)
        field = propagated_field(fund, initial.slice(0), cfg.grid.x, t, threads=args.threads)
        states = superposition_map(fund, cfg.frame, t, cfg.frame_c0)
    else:
        states = ermakov_map(fund, cfg.initial, t)
        x = support_grid(cfg.n, states, spacing=cfg.grid.x[1] - cfg.grid.x[0], tol=1e-12)
        field = eigenstate_field(cfg.n, fund, cfg.initial, x, t, threads=args.threads)
    traj = expectation_x(field)
    xi_bar, tau = arnold_transform(traj, states)
    write_trajectory_csv(out / "trajectory.csv", traj, xi_bar, tau)
    write_states(out / "states.csv", states)
    if args.plot:
        from .plotting import plot_trajectory
        plot_trajectory(traj, xi_bar, tau, out / "trajectory.png")
    print(f"trajectory over {len(t)} times")
    return EXIT_OK


def cmd_verify(cfg, out, args):
    results, extra = run_verify(cfg, out, seed=args.seed, threads=args.threads)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_name}: {r.measured:.3e} {r.relation} {r.threshold:.3e}"
              + (f" ({r.detail})" if r.detail else ""))
    if args.plot:
        from .plotting import plot_density, plot_fundamental, plot_report, plot_trajectory
        plot_report(results, out / "report.png")
        fund = extra["fund"]
        dense = np.linspace(0.0, fund.char.T, 400)
        plot_fundamental(dense, fund.char.raw(dense), out / "fundamental.png")
        plot_density(extra["field"], out / "eigenstate.png", f"n = {cfg.n}")
        if extra["traj"] is not None:
            plot_trajectory(extra["traj"], extra["xi_bar"], extra["tau"], out / "trajectory.png")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    "solve-fundamental": cmd_solve_fundamental,
    "eigenstate": cmd_eigenstate,
    "propagate": cmd_propagate,
    "greens": cmd_greens,
    "observables": cmd_observables,
    "verify": cmd_verify,
}
assert tuple(COMMANDS) == MODES


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qho", description="Exact wave functions of generalized harmonic oscillators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="qho-out", help="output directory (default: %(default)s)")
        p.add_argument("--threads", type=_threads, default=1, help="worker threads for grid evaluation")
        p.add_argument("--seed", type=_seed, default=0, help="seed for randomized verification points")
        p.add_argument("--plot", action="store_true", help="also render PNG figures next to the CSV files")
        if name == "propagate":
            p.add_argument("--input", help="initial-data CSV (overrides the config key)")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausticError as exc:
        print(f"numerical failure at t={exc.t:.12g}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericalError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
