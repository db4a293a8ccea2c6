"""Command-line entry point: ``hybridwalk {walk,optimize,batch,spread,tomo}``.

Exit codes: 0 success, 1 numeric or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .basin_hopper import OptimizerConfig
from .entanglement_metrics import participation_ratio, schmidt_report
from .errors import InvalidArgumentError
from .experiment_harness import (
    ExperimentConfig,
    hadamard_schedule,
    optimize_walk,
    random_schedule,
    run_batch,
    run_spread,
    simulate_walk,
    write_manifest,
    write_rows,
    write_walk_outputs,
)
from .tomography_sim import reconstruct, simulate_measurements
from .walk_core import BlochAngles, CoinSchedule, state_from_csv, state_to_csv

log = logging.getLogger("hybridwalk")


class UsageError(Exception):
    pass


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _bloch(args) -> BlochAngles:
    return BlochAngles(args.theta, args.phi)


def _opt_cfg(args) -> OptimizerConfig:
    return OptimizerConfig(
        n_hops=args.hops,
        step_size=args.step_size,
        temperature=args.temperature,
        local_max_iters=args.local_iters,
        rng_seed=args.seed,
    )


def _load_schedule(path: str) -> CoinSchedule:
    try:
        obj = json.loads(Path(path).read_text())
        return CoinSchedule.from_json_obj(obj)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read schedule file {path}: {exc}") from exc


def cmd_walk(args) -> int:
    kind, *rest = args.coin
    if kind not in ("hadamard", "random", "file"):
        raise UsageError(f"unknown coin {kind!r}; use hadamard, random or file PATH")
    if kind == "file":
        if len(rest) != 1:
            raise UsageError("--coin file needs exactly one PATH")
        sched = _load_schedule(rest[0])
        if args.steps is not None and args.steps != len(sched):
            raise UsageError(f"--steps {args.steps} disagrees with the {len(sched)}-step schedule file")
    elif rest:
        raise UsageError(f"--coin {kind} takes no argument")
    else:
        steps = 10 if args.steps is None else args.steps
        if steps < 1:
            raise UsageError("--steps must be >= 1")
        sched = hadamard_schedule(steps) if kind == "hadamard" else random_schedule(steps, args.seed)
    run = simulate_walk(kind, _bloch(args), sched)
    out = Path(args.out)
    write_manifest(out, "walk", args=_args_dict(args), schedule=sched.to_json_obj())
    if args.format == "json":
        _dump(out / "walk.json", {
            "schmidt": run.schmidt.tolist(),
            "density": run.density_table().tolist(),
            "schedule": sched.to_json_obj(),
        })
    else:
        write_walk_outputs(out, [run])
    state_to_csv(run.final, out / "final_state.csv")
    print(f"final S = {run.final_schmidt:.10f}")
    return 0


def cmd_optimize(args) -> int:
    cfg = _opt_cfg(args)
    run = optimize_walk(args.steps, _bloch(args), cfg, beta=args.beta)
    res = run.opt_result
    out = Path(args.out)
    write_manifest(out, "optimize", args=_args_dict(args), optimizer=cfg)
    report = schmidt_report(run.final)
    res.save_json(
        out / "opt_result.json",
        beta=args.beta,
        schmidt_norm=report.schmidt_norm,
        participation_ratio=participation_ratio(run.final),
        schmidt_report=report.to_json_obj(),
        schmidt_per_step=run.schmidt.tolist(),
    )
    _dump(out / "schedule.json", run.schedule.to_json_obj())
    res.hop_trace_to_csv(out / "hop_trace.csv")
    if args.format == "csv":
        write_walk_outputs(out, [run])
    print(f"best S = {report.schmidt_norm:.10f}  PR = {participation_ratio(run.final):.6f}")
    return 0


def cmd_batch(args) -> int:
    cfg = ExperimentConfig(
        n_steps=args.steps,
        n_samples=args.samples,
        selection_threshold=args.threshold,
        beta=args.beta,
        rng_seed=args.seed,
        output_dir=args.out,
        haar_uniform=args.haar,
        n_workers=args.workers,
    )
    stats, _ = run_batch(cfg, _opt_cfg(args))
    final = stats.per_run_final_S
    print(
        f"runs: {stats.n_total}  failed: {stats.n_failed}  selected: {stats.n_selected} "
        f"({100 * stats.selected_fraction:.1f}%)  min final S: {min(final):.6f}"
    )
    return 0


def cmd_spread(args) -> int:
    cfg = _opt_cfg(args)
    res = run_spread(args.steps, args.beta, _bloch(args), cfg)
    out = Path(args.out)
    write_manifest(out, "spread", args=_args_dict(args), optimizer=cfg)
    dens = res.final_density
    write_rows(
        out / "final_density.csv",
        ["site", "density_L", "density_R", "density"],
        ((int(j), float(dl), float(dr), float(dl + dr)) for j, (dl, dr) in zip(res.run.final.sites, dens)),
    )
    write_walk_outputs(out, [res.run])
    res.run.opt_result.save_json(
        out / "opt_result.json",
        beta=args.beta,
        schmidt_norm=res.schmidt_norm,
        participation_ratio=res.participation_ratio,
    )
    _dump(out / "schedule.json", res.run.schedule.to_json_obj())
    print(f"final S = {res.schmidt_norm:.10f}  PR = {res.participation_ratio:.6f}")
    return 0


def cmd_tomo(args) -> int:
    try:
        state = state_from_csv(args.input)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read state file {args.input}: {exc}") from exc
    if args.shots < 0:
        raise UsageError("--shots must be >= 0 (0 means noiseless)")
    shots = math.inf if args.shots == 0 else args.shots
    mr = simulate_measurements(state, shots, np.random.default_rng(args.seed))
    rec = reconstruct(mr)
    direct = schmidt_report(state)
    out = Path(args.out)
    write_manifest(out, "tomo", args=_args_dict(args))
    mr.to_csv(out / "measurements.csv")
    if args.format == "json":
        mr.save_json(out / "measurements.json")
    _dump(out / "tomo.json", {
        "n_shots": None if args.shots == 0 else args.shots,
        "n_reconstructed": [rec.n.nx, rec.n.ny, rec.n.nz],
        "schmidt_reconstructed": rec.schmidt_norm,
        "n_direct": [direct.n.nx, direct.n.ny, direct.n.nz],
        "schmidt_direct": direct.schmidt_norm,
        "abs_error": abs(rec.schmidt_norm - direct.schmidt_norm),
    })
    print(f"S_rec = {rec.schmidt_norm:.12f}  S_direct = {direct.schmidt_norm:.12f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    spin = argparse.ArgumentParser(add_help=False)
    spin.add_argument("--theta", type=float, default=0.0, help="initial Bloch polar angle")
    spin.add_argument("--phi", type=float, default=0.0, help="initial Bloch azimuth")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--hops", type=int, default=100)
    opt.add_argument("--step-size", type=float, default=0.5)
    opt.add_argument("--temperature", type=float, default=1.0)
    opt.add_argument("--local-iters", type=int, default=200)

    parser = argparse.ArgumentParser(prog="hybridwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", parents=[common, spin], help="simulate a fixed-coin walk")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--coin", nargs="+", default=["hadamard"], metavar="{hadamard,random,file PATH}")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("optimize", parents=[common, spin, opt], help="maximize S + beta*PR")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.0)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("batch", parents=[common, opt], help="optimize from many random initial spins")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=1e-4, help="outer-site population cut")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--haar", action="store_true", help="area-uniform initial spins")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("spread", parents=[common, spin, opt], help="participation-ratio regularized run")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.1)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("tomo", parents=[common], help="simulate intensity readout of a state file")
    p.add_argument("--input", required=True, help="state CSV (site, spin, re, im, density)")
    p.add_argument("--shots", type=int, default=0, help="photons per analyzer setting; 0 = noiseless")
    p.set_defaults(func=cmd_tomo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func = args.func
    try:
        return func(args)
    except (UsageError, InvalidArgumentError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hybridwalk {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
