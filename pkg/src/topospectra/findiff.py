"""Central finite-difference stencils for gradients, Jacobians and Hessians.

Two step policies are used throughout the package:

* ``gradient_step``: max(1e-6, 1e-6 |q|) for potential gradients,
* ``geometry_step``: 1e-5 (1 + |q|) for exterior derivatives of frame and
  connection fields, where second derivatives of the conformal factor set
  the error budget.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def gradient_step(q: np.ndarray) -> float:
    return max(1e-6, 1e-6 * float(np.linalg.norm(q)))


def geometry_step(q: np.ndarray, scale: float = 1e-5) -> float:
    return scale * (1.0 + float(np.linalg.norm(q)))


def gradient(f: Callable[[np.ndarray], float], q: np.ndarray, step: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = np.empty(q.size)
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = step
        out[i] = (f(q + e) - f(q - e)) / (2.0 * step)
    return out


def array_jacobian(f: Callable[[np.ndarray], np.ndarray], q: np.ndarray, step: float) -> np.ndarray:
    """Derivative of an array-valued field: result shape f(q).shape + (k,)."""
    q = np.asarray(q, dtype=float)
    sample = np.asarray(f(q), dtype=float)
    out = np.empty(sample.shape + (q.size,))
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = step
        out[..., i] = (np.asarray(f(q + e)) - np.asarray(f(q - e))) / (2.0 * step)
    return out


def hessian(f: Callable[[np.ndarray], float], q: np.ndarray, step: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    k = q.size
    out = np.empty((k, k))
    f0 = f(q)
    for i in range(k):
        ei = np.zeros_like(q)
        ei[i] = step
        out[i, i] = (f(q + ei) - 2.0 * f0 + f(q - ei)) / step**2
        for j in range(i + 1, k):
            ej = np.zeros_like(q)
            ej[j] = step
            out[i, j] = out[j, i] = (
                f(q + ei + ej) - f(q + ei - ej) - f(q - ei + ej) + f(q - ei - ej)
            ) / (4.0 * step**2)
    return out
