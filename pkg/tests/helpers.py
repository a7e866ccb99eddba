"""Shared numeric test utilities."""

from __future__ import annotations

import numpy as np


def fd_gradient(f, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up.flat[i] += step
        dn.flat[i] -= step
        grad.flat[i] = (f(up) - f(dn)) / (2.0 * step)
    return grad


def relative_error(approx, exact) -> float:
    """Norm of the difference over the norm of the exact value."""
    a = np.asarray(approx, dtype=float).ravel()
    b = np.asarray(exact, dtype=float).ravel()
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def flatten_params(params) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def set_params(params, flat: np.ndarray) -> None:
    offset = 0
    for p in params:
        p[...] = flat[offset : offset + p.size].reshape(p.shape)
        offset += p.size
