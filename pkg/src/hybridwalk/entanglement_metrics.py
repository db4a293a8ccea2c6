"""
Position-spin entanglement of a walk state.

The reduced spin density matrix is ``rho_C = 1/2 + n . sigma`` with

    n = (Re sum_j a*_jR a_jL, Im sum_j a*_jR a_jL, (sum_j |a_jL|^2 - sum_j |a_jR|^2) / 2),

its eigenvalues are ``E_pm = 1/2 +- |n|`` and the Schmidt norm
(p = 1, k = 2) is ``S = sqrt(E_-) + sqrt(E_+)``, ranging from 1 for a
product state to sqrt(2) for a maximally entangled one.

``1/2 - |n|`` loses all digits near product states, and the square root
then amplifies rounding to ~1e-8.  ``E_-`` is therefore evaluated as
``det(rho_C) / E_+``, with the determinant written as a sum of squared
2x2 minors ``|a_iL a_jR - a_jL a_iR|^2`` that involves no cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ContractViolationError, InvalidArgumentError
from .numdiff import central_difference
from .walk_core import (
    NORM_TOL,
    BlochAngles,
    CoinSchedule,
    WalkState,
    evolve,
    evolve_batch,
    make_initial_state,
)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class NVector:
    nx: float
    ny: float
    nz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.nx**2 + self.ny**2 + self.nz**2)

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.nx, self.ny, self.nz])


@dataclass(frozen=True)
class SchmidtReport:
    schmidt_norm: float
    lambda_plus: float
    lambda_minus: float
    e_plus: float
    e_minus: float
    n: NVector

    @property
    def schmidt_coeffs(self) -> tuple[float, float]:
        return self.lambda_plus, self.lambda_minus

    @property
    def eigenvalues(self) -> tuple[float, float]:
        return self.e_plus, self.e_minus

    def to_json_obj(self) -> dict:
        return {
            "schmidt_norm": self.schmidt_norm,
            "lambda_plus": self.lambda_plus,
            "lambda_minus": self.lambda_minus,
            "e_plus": self.e_plus,
            "e_minus": self.e_minus,
            "n": [self.n.nx, self.n.ny, self.n.nz],
        }


def _require_normalized(s: WalkState) -> None:
    err = abs(s.norm_sq() - 1.0)
    if err > NORM_TOL:
        raise ContractViolationError(f"state is not normalized (|norm^2 - 1| = {err:.3e})")


def n_vector_array(amps: NDArray[np.complex128]) -> NDArray[np.float64]:
    """n-vector for amplitude tables of shape ``(..., S, 2)``; returns ``(..., 3)``."""
    left, right = amps[..., 0], amps[..., 1]
    cross = np.sum(np.conj(right) * left, axis=-1)
    pop_l = np.sum(left.real**2 + left.imag**2, axis=-1)
    pop_r = np.sum(right.real**2 + right.imag**2, axis=-1)
    return np.stack([cross.real, cross.imag, 0.5 * (pop_l - pop_r)], axis=-1)


DET_FALLBACK = 1e-6


def _minor_determinant(amps: NDArray[np.complex128]) -> NDArray[np.float64]:
    left, right = amps[..., :, 0], amps[..., :, 1]
    minors = left[..., :, None] * right[..., None, :]
    minors = minors - np.swapaxes(minors, -1, -2)
    return 0.5 * np.sum(minors.real**2 + minors.imag**2, axis=(-2, -1))


def reduced_determinant(amps: NDArray[np.complex128]) -> NDArray[np.float64]:
    """``det(rho_C) = E_+ E_-`` for amplitude tables of shape ``(..., S, 2)``.

    ``p_L p_R - |c|^2`` has an absolute rounding error of order 1e-16, which
    is harmless unless the determinant itself is tiny.  Below
    ``DET_FALLBACK`` the exact sum of squared minors
    ``sum_{i<j} |a_iL a_jR - a_jL a_iR|^2`` is used instead.
    """
    left, right = amps[..., 0], amps[..., 1]
    cross = np.sum(np.conj(right) * left, axis=-1)
    pop_l = np.sum(left.real**2 + left.imag**2, axis=-1)
    pop_r = np.sum(right.real**2 + right.imag**2, axis=-1)
    det = np.asarray(pop_l * pop_r - (cross.real**2 + cross.imag**2))
    small = det < DET_FALLBACK
    if np.any(small):
        det = det.copy()
        det[small] = _minor_determinant(amps[small] if det.ndim else amps)
    return det


def eigenvalues_array(amps: NDArray[np.complex128]):
    """``(E_+, E_-, n)`` for amplitude tables of shape ``(..., S, 2)``."""
    n = n_vector_array(amps)
    e_plus = 0.5 + np.minimum(np.linalg.norm(n, axis=-1), 0.5)
    e_minus = reduced_determinant(amps) / e_plus
    return e_plus, e_minus, n


def n_vector(s: WalkState) -> NVector:
    _require_normalized(s)
    nx, ny, nz = n_vector_array(s.amplitudes)
    return NVector(float(nx), float(ny), float(nz))


def _report(n: NVector, e_plus: float, e_minus: float) -> SchmidtReport:
    lp, lm = math.sqrt(e_plus), math.sqrt(e_minus)
    return SchmidtReport(lp + lm, lp, lm, e_plus, e_minus, n)


def report_from_n(n: NVector) -> SchmidtReport:
    """Report from the n-vector alone (``E_- = 1/2 - |n|``, clipped at 0)."""
    r = min(n.norm, 0.5)
    return _report(n, 0.5 + r, 0.5 - r)


def schmidt_report(s: WalkState) -> SchmidtReport:
    _require_normalized(s)
    e_plus, e_minus, n = eigenvalues_array(s.amplitudes)
    return _report(NVector(*map(float, n)), float(e_plus), float(e_minus))


def schmidt_norm_svd(s: WalkState) -> float:
    """Sum of the singular values of the ``(sites, 2)`` amplitude matrix."""
    _require_normalized(s)
    return float(np.sum(np.linalg.svd(s.amplitudes, compute_uv=False)))


def participation_ratio_array(amps: NDArray[np.complex128]) -> NDArray[np.float64]:
    dens = amps.real**2 + amps.imag**2
    return 1.0 / np.sum(dens**2, axis=(-2, -1))


def participation_ratio(s: WalkState) -> float:
    """``1 / sum |alpha|^4``: the effective number of occupied basis states."""
    _require_normalized(s)
    return float(participation_ratio_array(s.amplitudes))


# --- optimization objective ------------------------------------------------


@dataclass(frozen=True)
class CostSetup:
    """What the cost needs besides ``w``: initial spin, number of steps, PR weight."""

    initial: BlochAngles = field(default_factory=lambda: BlochAngles(0.0, 0.0))
    n_steps: int = 10
    beta: float = 0.0

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidArgumentError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.beta < 0:
            raise InvalidArgumentError(f"beta must be >= 0, got {self.beta}")


class EntanglementCost:
    """Callable ``w -> -(S + beta * PR)`` of the final walk state.

    Reentrant: holds only immutable data.  ``batch`` evaluates many
    parameter vectors in one vectorized pass.
    """

    def __init__(self, setup: CostSetup):
        self.setup = setup
        self.initial_state = make_initial_state(setup.initial, setup.n_steps)
        self._amps0 = self.initial_state.amplitudes

    @property
    def dim(self) -> int:
        return 3 * self.setup.n_steps

    def _check(self, w: NDArray) -> NDArray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.dim:
            raise InvalidArgumentError(
                f"parameter vector must have length 3N = {self.dim}, got {w.shape[-1]}"
            )
        return w

    def final_amplitudes(self, w) -> NDArray[np.complex128]:
        return evolve_batch(self._amps0, self._check(w))

    def batch(self, ws) -> NDArray[np.float64]:
        amps = self.final_amplitudes(np.atleast_2d(ws))
        e_plus, e_minus, _ = eigenvalues_array(amps)
        value = np.sqrt(e_plus) + np.sqrt(e_minus)
        if self.setup.beta:
            value = value + self.setup.beta * participation_ratio_array(amps)
        return -value

    def __call__(self, w) -> float:
        w = self._check(w)
        if w.ndim != 1:
            raise InvalidArgumentError("use batch() for several parameter vectors")
        return float(self.batch(w[None, :])[0])

    def final_state(self, w) -> WalkState:
        return evolve(self.initial_state, CoinSchedule.from_vector(self._check(w)))


def cost(w, setup: CostSetup) -> float:
    """``-(S + beta * PR)`` after evolving ``setup.initial`` under ``w``."""
    return EntanglementCost(setup)(w)


def gradient_fd(w, setup: CostSetup, h: float = 1e-6) -> NDArray[np.float64]:
    """Central finite-difference gradient of :func:`cost`."""
    fn = EntanglementCost(setup)
    return central_difference(fn, fn._check(w), h)


def stationarity_prefactor(report: SchmidtReport) -> float:
    """``dS / d|n| = (sqrt(E_-) - sqrt(E_+)) / sqrt(1 - 4 |n|^2)``.

    Diverges for product states (``|n| -> 1/2``); returns NaN when
    ``1 - 4|n|^2 < 1e-12``.  At ``|n| = 0`` it is 0, but ``|n|`` itself is
    not differentiable there.
    """
    r = report.n.norm
    denom = 1.0 - 4.0 * r * r
    if denom < 1e-12:
        return math.nan
    return (report.lambda_minus - report.lambda_plus) / math.sqrt(denom)


@dataclass(frozen=True)
class StationarityCheck:
    passed: bool
    grad_inf: float
    n_norm: float


def stationarity_certificate(
    w, setup: CostSetup, grad_tol: float = 1e-4, n_tol: float = 1e-6, h: float = 1e-6
) -> StationarityCheck:
    """Either the FD gradient vanishes or ``|n|`` does (so ``E_- = E_+``)."""
    fn = EntanglementCost(setup)
    g = central_difference(fn, fn._check(w), h)
    r = float(np.linalg.norm(n_vector_array(fn.final_amplitudes(w))[0]))
    g_inf = float(np.max(np.abs(g)))
    return StationarityCheck(g_inf <= grad_tol or r <= n_tol, g_inf, r)
