"""
Basin hopping with Metropolis acceptance.

Each hop perturbs every coordinate of the current minimum by
``uniform(-step_size, step_size)``, relaxes the result with
:func:`local_minimize` and accepts the new minimum if it is not worse,
or otherwise with probability ``exp(-delta / temperature)``.  The best
minimum ever visited is returned, not the last accepted one.

The local minimizer is steepest descent on a central finite-difference
gradient with a halving Armijo line search.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidArgumentError, NumericFailureError
from .numdiff import central_difference
from .walk_core import fold_angles

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
MAX_STEP = 1e3
GRAD_FLOOR = 1e-12

BoundsMode = Literal["periodic-wrap", "unconstrained"]


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of :func:`basin_hop`.

    ``periodic-wrap`` folds a flat coin vector ``(xi, zeta, theta) * N``
    back into ``xi, zeta in [0, 2pi]``, ``theta in [0, pi/2]`` without
    changing any coin; use ``unconstrained`` for other cost functions.
    ``target_cost`` optionally ends the hop loop once the best cost is
    at or below it.
    """

    n_hops: int = 100
    step_size: float = 0.5
    temperature: float = 1.0
    local_max_iters: int = 200
    local_tolerance: float = 1e-8
    rng_seed: int = 0
    bounds_mode: BoundsMode = "periodic-wrap"
    fd_step: float = 1e-6
    target_cost: float | None = None

    def __post_init__(self):
        if self.n_hops < 1:
            raise InvalidArgumentError(f"n_hops must be >= 1, got {self.n_hops}")
        if self.step_size <= 0:
            raise InvalidArgumentError(f"step_size must be positive, got {self.step_size}")
        if self.temperature < 0:
            raise InvalidArgumentError(f"temperature must be >= 0, got {self.temperature}")
        if self.local_max_iters < 1:
            raise InvalidArgumentError("local_max_iters must be >= 1")
        if self.local_tolerance <= 0 or self.fd_step <= 0:
            raise InvalidArgumentError("local_tolerance and fd_step must be positive")
        if self.bounds_mode not in ("periodic-wrap", "unconstrained"):
            raise InvalidArgumentError(f"unknown bounds_mode {self.bounds_mode!r}")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidArgumentError("rng_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class HopRecord:
    hop: int
    proposed_cost: float
    accepted: bool
    best_so_far: float


@dataclass
class OptResult:
    best_w: NDArray[np.float64]
    best_cost: float
    hop_trace: list[HopRecord] = field(default_factory=list)
    n_cost_evals: int = 0
    start_cost: float = math.nan

    def to_json_obj(self) -> dict:
        return {
            "best_w": [float(x) for x in self.best_w],
            "best_cost": self.best_cost,
            "start_cost": self.start_cost,
            "n_cost_evals": self.n_cost_evals,
            "hop_trace": [asdict(r) for r in self.hop_trace],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "OptResult":
        return cls(
            best_w=np.array(obj["best_w"], dtype=float),
            best_cost=float(obj["best_cost"]),
            hop_trace=[HopRecord(**r) for r in obj["hop_trace"]],
            n_cost_evals=int(obj["n_cost_evals"]),
            start_cost=float(obj["start_cost"]),
        )

    def save_json(self, path: str | Path, **extra) -> None:
        obj = self.to_json_obj()
        obj.update(extra)
        Path(path).write_text(json.dumps(obj, indent=2) + "\n")

    def hop_trace_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["hop", "proposed_cost", "accepted", "best_so_far"])
            for r in self.hop_trace:
                writer.writerow([r.hop, repr(r.proposed_cost), int(r.accepted), repr(r.best_so_far)])


class _Counted:
    """Wraps a cost function, counts point evaluations and rejects non-finite values."""

    def __init__(self, fn: Callable):
        self.fn = fn
        self.n_evals = 0
        inner = getattr(fn, "batch", None)
        if inner is not None:
            self.batch = self._batch

    def __call__(self, w) -> float:
        self.n_evals += 1
        f = float(self.fn(w))
        if not math.isfinite(f):
            raise NumericFailureError(f"non-finite cost {f}", w=np.array(w, dtype=float))
        return f

    def _batch(self, ws) -> NDArray:
        ws = np.atleast_2d(ws)
        self.n_evals += len(ws)
        out = np.asarray(self.fn.batch(ws), dtype=float)
        bad = ~np.isfinite(out)
        if bad.any():
            k = int(np.argmax(bad))
            raise NumericFailureError(f"non-finite cost {out[k]}", w=np.array(ws[k], dtype=float))
        return out


def _local_minimize(fn: _Counted, w0: NDArray, cfg: OptimizerConfig) -> tuple[NDArray, float]:
    w = np.array(w0, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("starting point must be finite")
    f = fn(w)
    t = 1.0
    for _ in range(cfg.local_max_iters):
        g = central_difference(fn, w, cfg.fd_step)
        if np.max(np.abs(g)) <= GRAD_FLOOR:
            break
        gg = float(g @ g)
        t = min(2.0 * t, MAX_STEP)
        for _ in range(MAX_HALVINGS):
            w_new = w - t * g
            f_new = fn(w_new)
            if f_new <= f - ARMIJO_C * t * gg:
                break
            t *= 0.5
        else:
            break  # no descent along -g at any resolvable step: numerically stationary
        decrease = f - f_new
        w, f = w_new, f_new
        if decrease < cfg.local_tolerance:
            break
    return w, f


def local_minimize(cost_fn: Callable, w0, cfg: OptimizerConfig | None = None) -> tuple[NDArray, float]:
    """Steepest descent with backtracking from ``w0``.

    Returns ``(w*, f*)`` with ``f* = cost_fn(w*) <= cost_fn(w0)``.

    Raises
    ------
    NumericFailureError
        If ``cost_fn`` returns a non-finite value; ``err.w`` holds the point.
    """
    cfg = cfg or OptimizerConfig()
    return _local_minimize(_Counted(cost_fn), np.asarray(w0, dtype=float), cfg)


def basin_hop(cost_fn: Callable, w0, cfg: OptimizerConfig | None = None) -> OptResult:
    """Global minimization of ``cost_fn`` by basin hopping; deterministic given ``cfg.rng_seed``."""
    cfg = cfg or OptimizerConfig()
    fn = _Counted(cost_fn)
    rng = np.random.default_rng(cfg.rng_seed)
    w0 = np.asarray(w0, dtype=float)
    if cfg.bounds_mode == "periodic-wrap":
        if w0.size % 3:
            raise InvalidArgumentError("periodic-wrap needs a coin vector of length 3N")
        wrap = fold_angles
    else:
        wrap = np.array

    def relax(w):
        w_loc, _ = _local_minimize(fn, wrap(w), cfg)
        w_loc = wrap(w_loc)
        return w_loc, fn(w_loc)

    w_cur, f_cur = relax(w0)
    best_w, best_f = w_cur, f_cur
    result = OptResult(best_w, best_f, start_cost=f_cur)
    for hop in range(cfg.n_hops):
        if cfg.target_cost is not None and best_f <= cfg.target_cost:
            break
        proposal = w_cur + rng.uniform(-cfg.step_size, cfg.step_size, size=w_cur.size)
        w_new, f_new = relax(proposal)
        delta = f_new - f_cur
        if delta <= 0:
            accepted = True
        elif cfg.temperature > 0:
            accepted = bool(rng.random() < math.exp(-delta / cfg.temperature))
        else:
            accepted = False
        if accepted:
            w_cur, f_cur = w_new, f_new
        if f_new < best_f:
            best_w, best_f = w_new, f_new
        result.hop_trace.append(HopRecord(hop, f_new, accepted, best_f))
    result.best_w, result.best_cost = best_w, best_f
    result.n_cost_evals = fn.n_evals
    return result
