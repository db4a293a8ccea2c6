"""
Benchmarks: Hadamard vs random vs optimized walks, seeded batch campaigns over
random initial spins, and the participation-ratio regularized spreading run.

Everything is reproducible from the configs.  Batch sample ``i`` draws all
of its randomness from ``SeedSequence([rng_seed, i])``, so results do not
depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import __version__
from .basin_hopper import OptimizerConfig, OptResult, basin_hop
from .entanglement_metrics import (
    CostSetup,
    EntanglementCost,
    participation_ratio,
    schmidt_report,
)
from .errors import BatchError, InvalidArgumentError
from .walk_core import (
    TWO_PI,
    BlochAngles,
    CoinParams,
    CoinSchedule,
    Spin,
    WalkState,
    evolve,
    make_initial_state,
)

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    n_steps: int = 10
    n_samples: int = 200
    selection_threshold: float = 1e-4
    beta: float = 0.0
    rng_seed: int = 0
    output_dir: str | None = None
    haar_uniform: bool = False
    n_workers: int = 1

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidArgumentError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_samples < 1:
            raise InvalidArgumentError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.selection_threshold >= 0:
            raise InvalidArgumentError("selection_threshold must be >= 0")
        if self.beta < 0:
            raise InvalidArgumentError("beta must be >= 0")


# --- schedules and initial states ------------------------------------------


def hadamard_schedule(n_steps: int) -> CoinSchedule:
    if n_steps < 1:
        raise InvalidArgumentError(f"n_steps must be >= 1, got {n_steps}")
    return CoinSchedule(tuple(CoinParams(0.0, 0.0, math.pi / 4) for _ in range(n_steps)))


def random_parameters(n_steps: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Flat ``w`` with ``xi, zeta ~ U[0, 2pi]`` and ``theta ~ U[0, pi/2]``."""
    high = np.tile([TWO_PI, TWO_PI, math.pi / 2], n_steps)
    return rng.uniform(0.0, high)


def random_schedule(n_steps: int, seed) -> CoinSchedule:
    if n_steps < 1:
        raise InvalidArgumentError(f"n_steps must be >= 1, got {n_steps}")
    return CoinSchedule.from_vector(random_parameters(n_steps, np.random.default_rng(seed)))


def sample_initial_state(rng: np.random.Generator, haar_uniform: bool = False) -> BlochAngles:
    """``theta ~ U[0, pi]``, ``phi ~ U[0, 2pi]``.

    This is uniform in the angles, not in area on the Bloch sphere; pass
    ``haar_uniform=True`` for ``cos(theta) ~ U[-1, 1]`` instead.
    """
    if haar_uniform:
        theta = math.acos(1.0 - 2.0 * rng.uniform())
    else:
        theta = rng.uniform(0.0, math.pi)
    return BlochAngles(theta, rng.uniform(0.0, TWO_PI))


# --- single walks ---------------------------------------------------------


@dataclass
class WalkRun:
    """A walk with its full trajectory and per-step Schmidt norm."""

    label: str
    schedule: CoinSchedule
    trajectory: list[WalkState]
    schmidt: NDArray[np.float64]
    opt_result: OptResult | None = None

    @property
    def final(self) -> WalkState:
        return self.trajectory[-1]

    @property
    def final_schmidt(self) -> float:
        return float(self.schmidt[-1])

    def density_table(self) -> NDArray[np.float64]:
        """``(N+1, 2*half_width+1, 2)`` densities along the walk."""
        return np.stack([s.density() for s in self.trajectory])


def simulate_walk(label: str, initial: BlochAngles, sched: CoinSchedule, opt_result=None) -> WalkRun:
    s0 = make_initial_state(initial, len(sched))
    _, traj = evolve(s0, sched, record_trajectory=True)
    schmidt = np.array([schmidt_report(s).schmidt_norm for s in traj])
    return WalkRun(label, sched, traj, schmidt, opt_result)


def optimize_walk(
    n_steps: int,
    initial: BlochAngles,
    opt_cfg: OptimizerConfig,
    beta: float = 0.0,
    w0: NDArray | None = None,
) -> WalkRun:
    """Basin-hop ``-(S + beta * PR)`` from a random start drawn with ``opt_cfg.rng_seed``."""
    fn = EntanglementCost(CostSetup(initial, n_steps, beta))
    if w0 is None:
        rng = np.random.default_rng(np.random.SeedSequence([opt_cfg.rng_seed, 0x5EED]))
        w0 = random_parameters(n_steps, rng)
    res = basin_hop(fn, w0, opt_cfg)
    return simulate_walk("optimized", initial, CoinSchedule.from_vector(res.best_w), res)


def run_comparison(
    n_steps: int,
    initial: BlochAngles,
    opt_cfg: OptimizerConfig | None = None,
    random_seed: int | None = None,
) -> dict[str, WalkRun]:
    """Hadamard, one random and one optimized schedule from the same initial spin."""
    opt_cfg = opt_cfg or OptimizerConfig()
    if random_seed is None:
        random_seed = opt_cfg.rng_seed
    return {
        "hadamard": simulate_walk("hadamard", initial, hadamard_schedule(n_steps)),
        "random": simulate_walk("random", initial, random_schedule(n_steps, random_seed)),
        "optimized": optimize_walk(n_steps, initial, opt_cfg),
    }


@dataclass
class SpreadResult:
    run: WalkRun
    final_density: NDArray[np.float64]
    schmidt_norm: float
    participation_ratio: float


def run_spread(
    n_steps: int = 10,
    beta: float = 0.1,
    initial: BlochAngles = BlochAngles(0.0, 0.0),
    opt_cfg: OptimizerConfig | None = None,
) -> SpreadResult:
    """Optimize ``S + beta * PR`` to push the final state over all reachable sites."""
    if not beta > 0:
        raise InvalidArgumentError(f"run_spread needs beta > 0, got {beta}")
    run = optimize_walk(n_steps, initial, opt_cfg or OptimizerConfig(), beta=beta)
    run.label = "spread"
    return SpreadResult(run, run.final.density(), run.final_schmidt, participation_ratio(run.final))


# --- batch campaign -------------------------------------------------------


@dataclass
class RunRecord:
    index: int
    theta: float
    phi: float
    opt_seed: int
    best_w: list[float] | None = None
    best_cost: float | None = None
    schmidt_per_step: list[float] | None = None
    final_density: list[list[float]] | None = None
    final_schmidt: float | None = None
    selected: bool = False
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class BatchStats:
    n_total: int
    n_selected: int
    n_failed: int
    mean_schmidt_per_step: list[float] | None
    mean_final_density: list[list[float]] | None
    per_run_final_S: list[float]
    sites: list[int] = field(default_factory=list)

    @property
    def averages_defined(self) -> bool:
        return self.n_selected > 0

    @property
    def selected_fraction(self) -> float:
        return self.n_selected / self.n_total

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["averages_defined"] = self.averages_defined
        obj["selected_fraction"] = self.selected_fraction
        return obj


def is_selected(final_density: NDArray, n_steps: int, threshold: float) -> bool:
    """Outer-site filter: population (both spins) at ``-N`` or ``+N`` exceeds ``threshold``."""
    pop = np.asarray(final_density).sum(axis=1)
    half = (len(pop) - 1) // 2
    return bool(pop[half - n_steps] > threshold or pop[half + n_steps] > threshold)


def _run_one(args) -> RunRecord:
    index, cfg, opt_cfg = args
    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, index]))
    bloch = sample_initial_state(rng, cfg.haar_uniform)
    w0 = random_parameters(cfg.n_steps, rng)
    opt_seed = int(rng.integers(0, 2**63))
    rec = RunRecord(index, bloch.theta, bloch.phi, opt_seed)
    try:
        run = optimize_walk(cfg.n_steps, bloch, replace(opt_cfg, rng_seed=opt_seed), cfg.beta, w0)
    except Exception as exc:  # recorded and skipped; the batch decides whether to abort
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    dens = run.final.density()
    rec.best_w = [float(x) for x in run.opt_result.best_w]
    rec.best_cost = run.opt_result.best_cost
    rec.schmidt_per_step = [float(x) for x in run.schmidt]
    rec.final_density = dens.tolist()
    rec.final_schmidt = run.final_schmidt
    rec.selected = is_selected(dens, cfg.n_steps, cfg.selection_threshold)
    return rec


def aggregate(records: Sequence[RunRecord], cfg: ExperimentConfig) -> BatchStats:
    ok = sorted((r for r in records if not r.failed), key=lambda r: r.index)
    chosen = [r for r in ok if r.selected]
    mean_s = mean_d = None
    if chosen:
        mean_s = np.mean([r.schmidt_per_step for r in chosen], axis=0).tolist()
        mean_d = np.mean([r.final_density for r in chosen], axis=0).tolist()
    return BatchStats(
        n_total=len(records),
        n_selected=len(chosen),
        n_failed=len(records) - len(ok),
        mean_schmidt_per_step=mean_s,
        mean_final_density=mean_d,
        per_run_final_S=[r.final_schmidt for r in ok],
        sites=list(range(-cfg.n_steps, cfg.n_steps + 1)),
    )


def run_batch(
    cfg: ExperimentConfig, opt_cfg: OptimizerConfig | None = None
) -> tuple[BatchStats, list[RunRecord]]:
    """Optimize walks from ``cfg.n_samples`` random initial spins and average the selected ones.

    Raises
    ------
    BatchError
        If more than 1% of the runs failed.
    """
    opt_cfg = opt_cfg or OptimizerConfig()
    jobs = [(i, cfg, opt_cfg) for i in range(cfg.n_samples)]
    if cfg.n_workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.n_workers))))
    else:
        records = [_run_one(job) for job in jobs]
    stats = aggregate(records, cfg)
    if cfg.output_dir is not None:
        write_batch_outputs(Path(cfg.output_dir), cfg, opt_cfg, stats, records)
    for r in records:
        if r.failed:
            log.warning("run %d failed: %s", r.index, r.error)
    if stats.n_failed > MAX_FAILURE_FRACTION * stats.n_total:
        raise BatchError(f"{stats.n_failed} of {stats.n_total} runs failed")
    return stats, records


# --- persistence ----------------------------------------------------------


def write_manifest(out_dir: Path, command: str, **configs) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    obj = {"command": command, "version": __version__}
    for name, cfg in configs.items():
        obj[name] = asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else cfg
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(obj, indent=2, default=str) + "\n")
    return path


def save_records(records: Sequence[RunRecord], path: Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def load_records(path: Path) -> list[RunRecord]:
    with open(path) as fh:
        return [RunRecord(**json.loads(line)) for line in fh if line.strip()]


def write_batch_outputs(out_dir, cfg, opt_cfg, stats: BatchStats, records) -> None:
    out_dir = Path(out_dir)
    write_manifest(out_dir, "batch", experiment=cfg, optimizer=opt_cfg)
    save_records(records, out_dir / "runs.jsonl")
    (out_dir / "batch_stats.json").write_text(json.dumps(stats.to_json_obj(), indent=2) + "\n")
    if stats.averages_defined:
        write_rows(out_dir / "mean_schmidt.csv", ["step", "mean_schmidt"], enumerate(stats.mean_schmidt_per_step))
        write_rows(
            out_dir / "mean_density.csv",
            ["site", "density_L", "density_R", "density"],
            ((j, dl, dr, dl + dr) for j, (dl, dr) in zip(stats.sites, stats.mean_final_density)),
        )


def write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def step_density_rows(run: WalkRun):
    """Long-format density rows ``(walk, step, lambda, site, spin, density)``."""
    for step, s in enumerate(run.trajectory):
        dens = s.density()
        for k, site in enumerate(s.sites):
            for spin in Spin:
                yield run.label, step, 2 * k + int(spin), int(site), spin.name, float(dens[k, spin])


def schmidt_rows(runs: Sequence[WalkRun]):
    for step in range(len(runs[0].schmidt)):
        yield (step, *(float(r.schmidt[step]) for r in runs))


def write_walk_outputs(out_dir: Path, runs: Sequence[WalkRun]) -> None:
    """``step-density.csv`` (long format, all walks) and ``schmidt.csv`` (step vs S per walk)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(
        out_dir / "step-density.csv",
        ["walk", "step", "lambda", "site", "spin", "density"],
        (row for run in runs for row in step_density_rows(run)),
    )
    header = ["step"] + (["schmidt_norm"] if len(runs) == 1 else [r.label for r in runs])
    write_rows(out_dir / "schmidt.csv", header, schmidt_rows(runs))

