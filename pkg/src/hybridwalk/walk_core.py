"""
One-dimensional coined quantum walk with per-step SU(2) coins.

The walker lives on sites ``-half_width .. +half_width`` and carries a
two-level spin ``{L, R}``.  Amplitudes are stored as a dense
``(2 * half_width + 1, 2)`` complex array: row ``j + half_width`` is site
``j``, column 0 is ``L`` and column 1 is ``R``.

One step applies the coin ``C_i`` on every site followed by the shift

    T = sum_m |m-1, R><m, L| + |m+1, L><m, R|,

which moves L-components left and R-components right while exchanging
the spin label.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import BoundaryOverflowError, ContractViolationError, InvalidArgumentError

__all__ = [
    "Spin",
    "BlochAngles",
    "CoinParams",
    "CoinSchedule",
    "WalkState",
    "make_initial_state",
    "coin_matrix",
    "coin_matrices",
    "apply_coin",
    "apply_shift",
    "evolve",
    "evolve_batch",
    "state_to_csv",
    "state_from_csv",
    "trajectory_to_csv",
]

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-9


class Spin(IntEnum):
    L = 0
    R = 1


@dataclass(frozen=True)
class BlochAngles:
    """Initial spin superposition ``cos(theta/2)|L> + e^{i phi} sin(theta/2)|R>``."""

    theta: float
    phi: float

    def __post_init__(self):
        eps = 1e-12
        if not (-eps <= self.theta <= math.pi + eps):
            raise InvalidArgumentError(f"theta must lie in [0, pi], got {self.theta}")
        if not (-eps <= self.phi <= TWO_PI + eps):
            raise InvalidArgumentError(f"phi must lie in [0, 2pi], got {self.phi}")


@dataclass(frozen=True)
class CoinParams:
    """Angles ``(xi, zeta, theta)`` of one SU(2) coin, in radians."""

    xi: float
    zeta: float
    theta: float

    def matrix(self) -> NDArray[np.complex128]:
        return coin_matrix(self)

    def canonical(self) -> "CoinParams":
        """Equivalent angles with ``xi, zeta`` in ``[0, 2pi]`` and ``theta`` in ``[0, pi/2]``.

        The coin matrix is unchanged: ``theta -> theta - pi`` is absorbed by
        shifting both phases by ``pi``, and ``theta -> pi - theta`` by
        shifting ``xi`` alone.
        """
        xi, zeta, theta = fold_angles(np.array([self.xi, self.zeta, self.theta]))
        return CoinParams(float(xi), float(zeta), float(theta))


def fold_angles(w: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map a flat ``(..., 3N)`` parameter array to canonical ranges without changing any coin."""
    w = np.array(w, dtype=float, copy=True)
    xi, zeta, theta = w[..., 0::3], w[..., 1::3], w[..., 2::3]
    theta %= TWO_PI
    upper = theta >= math.pi
    theta[upper] -= math.pi
    xi[upper] += math.pi
    zeta[upper] += math.pi
    mirror = theta > 0.5 * math.pi
    theta[mirror] = math.pi - theta[mirror]
    xi[mirror] += math.pi
    xi %= TWO_PI
    zeta %= TWO_PI
    w[..., 0::3], w[..., 1::3], w[..., 2::3] = xi, zeta, theta
    return w


@dataclass(frozen=True)
class CoinSchedule:
    """Ordered coins, one per step.  Flattens to ``w = (xi_1, zeta_1, theta_1, ...)``."""

    steps: tuple[CoinParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) < 1:
            raise InvalidArgumentError("a schedule needs at least one step")

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_vector(self) -> NDArray[np.float64]:
        return np.array([a for c in self.steps for a in (c.xi, c.zeta, c.theta)], dtype=float)

    @classmethod
    def from_vector(cls, w: Sequence[float]) -> "CoinSchedule":
        w = np.asarray(w, dtype=float).ravel()
        if w.size == 0 or w.size % 3:
            raise InvalidArgumentError(f"parameter vector length must be a positive multiple of 3, got {w.size}")
        return cls(tuple(CoinParams(*map(float, w[i : i + 3])) for i in range(0, w.size, 3)))

    def to_json_obj(self) -> list[dict]:
        return [{"xi": c.xi, "zeta": c.zeta, "theta": c.theta} for c in self.steps]

    @classmethod
    def from_json_obj(cls, obj: Iterable[dict]) -> "CoinSchedule":
        return cls(tuple(CoinParams(float(d["xi"]), float(d["zeta"]), float(d["theta"])) for d in obj))


@dataclass(frozen=True, eq=False)
class WalkState:
    """Pure state of the walker.

    Attributes
    ----------
    half_width : int
        Lattice spans sites ``-half_width .. +half_width``.
    amplitudes : ndarray, shape (2*half_width+1, 2)
        ``amplitudes[j + half_width, spin]``.
    """

    half_width: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        if self.half_width < 0:
            raise InvalidArgumentError(f"half_width must be >= 0, got {self.half_width}")
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2 * self.half_width + 1, 2):
            raise InvalidArgumentError(
                f"amplitudes must have shape {(2 * self.half_width + 1, 2)}, got {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def n_sites(self) -> int:
        return 2 * self.half_width + 1

    def amplitude(self, site: int, spin: Spin | int) -> complex:
        if abs(site) > self.half_width:
            return 0j
        return complex(self.amplitudes[site + self.half_width, int(spin)])

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def density(self) -> NDArray[np.float64]:
        """``|alpha_{j, sigma}|^2`` with the same layout as ``amplitudes``."""
        return np.abs(self.amplitudes) ** 2

    def site_population(self) -> NDArray[np.float64]:
        """Population per site summed over spin."""
        return self.density().sum(axis=1)

    def lambda_density(self) -> NDArray[np.float64]:
        """Density on the interleaved index ``lambda = 2 * (j + half_width) + spin``."""
        return self.density().ravel()

    def padded(self, half_width: int) -> "WalkState":
        """Same state on a lattice at least as wide."""
        if half_width < self.half_width:
            raise InvalidArgumentError("cannot shrink a lattice with padded()")
        pad = half_width - self.half_width
        return WalkState(half_width, np.pad(self.amplitudes, ((pad, pad), (0, 0))))

    @classmethod
    def from_dict(cls, amps: dict[tuple[int, Spin | int], complex], half_width: int) -> "WalkState":
        arr = np.zeros((2 * half_width + 1, 2), dtype=np.complex128)
        for (site, spin), a in amps.items():
            if abs(site) > half_width:
                raise InvalidArgumentError(f"site {site} outside lattice of half-width {half_width}")
            arr[site + half_width, int(spin)] += a
        return cls(half_width, arr)


def make_initial_state(bloch: BlochAngles, half_width: int) -> WalkState:
    """Walker localized on site 0 with the spin given by ``bloch``."""
    if half_width < 0:
        raise InvalidArgumentError(f"half_width must be >= 0, got {half_width}")
    amps = np.zeros((2 * half_width + 1, 2), dtype=np.complex128)
    amps[half_width, Spin.L] = math.cos(bloch.theta / 2)
    amps[half_width, Spin.R] = np.exp(1j * bloch.phi) * math.sin(bloch.theta / 2)
    return WalkState(half_width, amps)


def coin_matrix(c: CoinParams) -> NDArray[np.complex128]:
    """Return ``[[e^{i xi} cos t, e^{i zeta} sin t], [e^{-i zeta} sin t, -e^{-i xi} cos t]]``."""
    ct, st = math.cos(c.theta), math.sin(c.theta)
    ex, ez = np.exp(1j * c.xi), np.exp(1j * c.zeta)
    return np.array(
        [[ex * ct, ez * st], [np.conj(ez) * st, -np.conj(ex) * ct]],
        dtype=np.complex128,
    )


def coin_matrices(w: NDArray[np.float64]) -> NDArray[np.complex128]:
    """Vectorized coins for flat parameter arrays of shape ``(..., 3N)``; returns ``(..., N, 2, 2)``."""
    w = np.asarray(w, dtype=float)
    xi, zeta, theta = w[..., 0::3], w[..., 1::3], w[..., 2::3]
    ct, st = np.cos(theta), np.sin(theta)
    ex, ez = np.exp(1j * xi), np.exp(1j * zeta)
    out = np.empty(xi.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = ex * ct
    out[..., 0, 1] = ez * st
    out[..., 1, 0] = np.conj(ez) * st
    out[..., 1, 1] = -np.conj(ex) * ct
    return out


def _check_normalized(s: WalkState) -> None:
    err = abs(s.norm_sq() - 1.0)
    if err > NORM_TOL:
        raise ContractViolationError(f"state is not normalized (|norm^2 - 1| = {err:.3e})")


def _coin_kernel(amps: NDArray, c: NDArray) -> NDArray:
    # c broadcasts against amps[..., :, 0]; shape (..., 1) per matrix entry
    left, right = amps[..., 0], amps[..., 1]
    out = np.empty_like(amps)
    out[..., 0] = c[..., 0, 0] * left + c[..., 0, 1] * right
    out[..., 1] = c[..., 1, 0] * left + c[..., 1, 1] * right
    return out


def _shift_kernel(amps: NDArray) -> NDArray:
    out = np.zeros_like(amps)
    out[..., :-1, 1] = amps[..., 1:, 0]  # (m, L) -> (m-1, R)
    out[..., 1:, 0] = amps[..., :-1, 1]  # (m, R) -> (m+1, L)
    return out


def apply_coin(s: WalkState, c: CoinParams) -> WalkState:
    """Apply the coin of ``c`` independently on every site."""
    _check_normalized(s)
    m = coin_matrix(c)
    return WalkState(s.half_width, _coin_kernel(s.amplitudes, m[None, :, :]))


def apply_shift(s: WalkState) -> WalkState:
    """Apply the spin-exchanging shift.

    Raises
    ------
    BoundaryOverflowError
        If ``(-half_width, L)`` or ``(+half_width, R)`` carries amplitude.
    """
    a = s.amplitudes
    if a[0, Spin.L] != 0 or a[-1, Spin.R] != 0:
        raise BoundaryOverflowError(
            f"amplitude would leave the lattice of half-width {s.half_width}; enlarge the lattice"
        )
    return WalkState(s.half_width, _shift_kernel(a))


def evolve(
    s0: WalkState, sched: CoinSchedule, record_trajectory: bool = False
) -> WalkState | tuple[WalkState, list[WalkState]]:
    """Run ``len(sched)`` steps, each coin then shift.

    With ``record_trajectory`` the states ``psi_0 .. psi_N`` are returned as well.
    """
    if s0.half_width < len(sched):
        raise InvalidArgumentError(
            f"half_width {s0.half_width} is smaller than the number of steps {len(sched)}"
        )
    state = s0
    traj = [s0]
    for c in sched:
        state = apply_shift(apply_coin(state, c))
        if record_trajectory:
            traj.append(state)
    if record_trajectory:
        return state, traj
    return state


def evolve_batch(
    amps0: NDArray[np.complex128], w: NDArray[np.float64], record_trajectory: bool = False
) -> NDArray[np.complex128]:
    """Evolve one initial amplitude table under many parameter vectors at once.

    Parameters
    ----------
    amps0 : ndarray, shape (S, 2)
        Initial amplitudes; the lattice must be wide enough for the walk.
    w : ndarray, shape (B, 3N) or (3N,)
        Flat coin parameters.
    record_trajectory : bool
        If true return shape ``(B, N+1, S, 2)`` instead of ``(B, S, 2)``.

    No normalization or boundary checks are made; callers size the
    lattice with ``half_width >= N`` from a site-0 state.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    coins = coin_matrices(w)  # (B, N, 2, 2)
    n_batch, n_steps = coins.shape[:2]
    amps = np.broadcast_to(np.asarray(amps0, dtype=np.complex128), (n_batch,) + np.shape(amps0)).copy()
    if record_trajectory:
        traj = np.empty((n_batch, n_steps + 1) + amps.shape[1:], dtype=np.complex128)
        traj[:, 0] = amps
    for i in range(n_steps):
        amps = _shift_kernel(_coin_kernel(amps, coins[:, i, None, :, :]))
        if record_trajectory:
            traj[:, i + 1] = amps
    return traj if record_trajectory else amps


# --- CSV export -----------------------------------------------------------

_STATE_FIELDS = ["site", "spin", "re", "im", "density"]


def _state_rows(s: WalkState):
    for k, site in enumerate(s.sites):
        for spin in Spin:
            a = s.amplitudes[k, spin]
            yield [int(site), spin.name, repr(float(a.real)), repr(float(a.imag)), repr(float(abs(a) ** 2))]


def state_to_csv(s: WalkState, path: str | Path) -> None:
    """Write ``site, spin, re, im, density`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_STATE_FIELDS)
        writer.writerows(_state_rows(s))


def state_from_csv(path: str | Path) -> WalkState:
    """Read a state written by :func:`state_to_csv`; missing entries are zero."""
    amps: dict[tuple[int, int], complex] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            site = int(row["site"])
            spin = Spin[row["spin"].strip().upper()]
            amps[(site, spin)] = complex(float(row["re"]), float(row["im"]))
    if not amps:
        raise InvalidArgumentError(f"no amplitudes found in {path}")
    half_width = max(abs(site) for site, _ in amps)
    return WalkState.from_dict(amps, half_width)


def trajectory_to_csv(traj: Sequence[WalkState], path: str | Path) -> None:
    """Long-format trajectory: ``step, site, spin, lambda, re, im, density``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "site", "spin", "lambda", "re", "im", "density"])
        for step, s in enumerate(traj):
            for k, site in enumerate(s.sites):
                for spin in Spin:
                    a = s.amplitudes[k, spin]
                    writer.writerow(
                        [step, int(site), spin.name, 2 * k + int(spin),
                         repr(float(a.real)), repr(float(a.imag)), repr(float(abs(a) ** 2))]
                    )
