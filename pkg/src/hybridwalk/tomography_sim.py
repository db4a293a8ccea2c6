"""
Intensity-only readout of the n-vector and Schmidt norm.

Per site ``j`` three analyzer settings are simulated:

- direct:    ``I_L = |a_L|^2``, ``I_R = |a_R|^2``
- diagonal:  ``I_D = |a_L + a_R|^2 / 2``
- circular:  ``I_C = |a_L + i a_R|^2 / 2``

Since ``I_D - (I_L + I_R)/2 = Re(a*_R a_L)`` and
``I_C - (I_L + I_R)/2 = Im(a*_R a_L)``, the same-site cross terms (and hence
the n-vector) follow from intensities alone.  Finite ``n_shots`` replaces
each setting's outcome distribution by multinomial frequencies.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .entanglement_metrics import NVector, report_from_n
from .errors import InconsistentDataError, InvalidArgumentError
from .walk_core import WalkState

__all__ = ["MeasurementRecord", "Reconstruction", "simulate_measurements", "reconstruct"]

NOISELESS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Real-valued intensities per site; no amplitudes are kept."""

    sites: NDArray[np.int64]
    I_L: NDArray[np.float64]
    I_R: NDArray[np.float64]
    I_D: NDArray[np.float64]
    I_C: NDArray[np.float64]
    n_shots: float = math.inf

    def __post_init__(self):
        for name in ("I_L", "I_R", "I_D", "I_C"):
            arr = np.asarray(getattr(self, name))
            if np.iscomplexobj(arr):
                raise InvalidArgumentError("intensities must be real")
            object.__setattr__(self, name, arr.astype(float))
        object.__setattr__(self, "sites", np.asarray(self.sites, dtype=np.int64))

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.n_shots)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["site", "I_L", "I_R", "I_D", "I_C"])
            for row in zip(self.sites, self.I_L, self.I_R, self.I_D, self.I_C):
                writer.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])

    @classmethod
    def from_csv(cls, path: str | Path, n_shots: float = math.inf) -> "MeasurementRecord":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        cols = {k: np.array([float(r[k]) for r in rows]) for k in ("I_L", "I_R", "I_D", "I_C")}
        return cls(np.array([int(r["site"]) for r in rows]), n_shots=n_shots, **cols)

    def to_json_obj(self) -> dict:
        return {
            "n_shots": None if self.noiseless else int(self.n_shots),
            "sites": self.sites.tolist(),
            "I_L": self.I_L.tolist(),
            "I_R": self.I_R.tolist(),
            "I_D": self.I_D.tolist(),
            "I_C": self.I_C.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MeasurementRecord":
        shots = math.inf if obj["n_shots"] is None else int(obj["n_shots"])
        return cls(
            np.array(obj["sites"]),
            *(np.array(obj[k], dtype=float) for k in ("I_L", "I_R", "I_D", "I_C")),
            n_shots=shots,
        )

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), indent=2) + "\n")


@dataclass(frozen=True)
class Reconstruction:
    n: NVector
    schmidt_norm: float


def _sample(p: NDArray, n_shots: int, rng: np.random.Generator) -> NDArray:
    p = np.clip(p, 0.0, None)
    counts = rng.multinomial(n_shots, p / p.sum())
    return counts / n_shots


def simulate_measurements(
    s: WalkState, n_shots: float = math.inf, rng: np.random.Generator | int | None = None
) -> MeasurementRecord:
    """Intensities of the three analyzer settings at every site of ``s``.

    Parameters
    ----------
    s : WalkState
    n_shots : int or math.inf
        Detected photons per analyzer setting; ``inf`` gives exact intensities.
    rng : Generator or seed, optional
        Only used when ``n_shots`` is finite.
    """
    if not math.isinf(n_shots) and (n_shots < 1 or int(n_shots) != n_shots):
        raise InvalidArgumentError(f"n_shots must be a positive integer or inf, got {n_shots}")
    a_l, a_r = s.amplitudes[:, 0], s.amplitudes[:, 1]
    i_l, i_r = np.abs(a_l) ** 2, np.abs(a_r) ** 2
    i_d, i_d_perp = np.abs(a_l + a_r) ** 2 / 2, np.abs(a_l - a_r) ** 2 / 2
    i_c, i_c_perp = np.abs(a_l + 1j * a_r) ** 2 / 2, np.abs(a_l - 1j * a_r) ** 2 / 2
    if not math.isinf(n_shots):
        rng = np.random.default_rng(rng)
        k = len(a_l)
        n = int(n_shots)
        direct = _sample(np.concatenate([i_l, i_r]), n, rng)
        i_l, i_r = direct[:k], direct[k:]
        i_d = _sample(np.concatenate([i_d, i_d_perp]), n, rng)[:k]
        i_c = _sample(np.concatenate([i_c, i_c_perp]), n, rng)[:k]
    return MeasurementRecord(s.sites.copy(), i_l, i_r, i_d, i_c, n_shots)


def reconstruct(mr: MeasurementRecord, tol: float | None = None) -> Reconstruction:
    """Recover ``n`` and ``S`` from intensities.

    ``tol`` bounds how far a site's quadruple may sit outside the physical
    set (defaults to ``1e-9`` noiseless, ``10 / sqrt(n_shots)`` otherwise).

    Raises
    ------
    InconsistentDataError
        If some site violates ``0 <= I <= 1`` or
        ``Re^2 + Im^2 <= I_L * I_R`` by more than ``tol``.
    """
    if tol is None:
        tol = NOISELESS_TOL if mr.noiseless else 10.0 / math.sqrt(mr.n_shots)
    mean = 0.5 * (mr.I_L + mr.I_R)
    re = mr.I_D - mean
    im = mr.I_C - mean
    for name in ("I_L", "I_R", "I_D", "I_C"):
        v = getattr(mr, name)
        if np.any(v < -tol) or np.any(v > 1 + tol):
            raise InconsistentDataError(f"{name} outside [0, 1]")
    excess = re**2 + im**2 - mr.I_L * mr.I_R
    if np.any(excess > tol):
        j = int(mr.sites[np.argmax(excess)])
        raise InconsistentDataError(f"intensities at site {j} admit no amplitude pair (excess {excess.max():.3e})")
    n = NVector(float(re.sum()), float(im.sum()), 0.5 * float(mr.I_L.sum() - mr.I_R.sum()))
    return Reconstruction(n, report_from_n(n).schmidt_norm)
