"""Central finite differences for scalar functions of a flat parameter vector."""

from __future__ import annotations

import numpy as np


def central_difference(fn, w, h: float = 1e-6) -> np.ndarray:
    """Gradient of ``fn`` at ``w`` by central differences with step ``h``.

    If ``fn`` has a ``batch`` method taking a ``(B, n)`` array, all ``2n``
    displaced points are evaluated in one call.
    """
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    w = np.asarray(w, dtype=float)
    n = w.size
    shifts = h * np.eye(n)
    points = np.concatenate([w + shifts, w - shifts])
    batch = getattr(fn, "batch", None)
    if batch is not None:
        values = np.asarray(batch(points), dtype=float)
    else:
        values = np.array([fn(p) for p in points], dtype=float)
    return (values[:n] - values[n:]) / (2.0 * h)
