"""Central finite differences with one Richardson extrapolation.

Used only as an independent oracle for the jet derivatives.
"""

from __future__ import annotations

import numpy as np


def default_step(x) -> float:
    return 1e-4 * max(1.0, float(np.linalg.norm(x)))


def derivative(f, x, direction, h: float | None = None):
    """Directional derivative of f at x; O(h^4) after extrapolation."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    h = default_step(x) if h is None else h

    def central(step):
        return (np.asarray(f(x + step * d)) - np.asarray(f(x - step * d))) / (2 * step)

    coarse, fine = central(h), central(h / 2)
    return (4 * fine - coarse) / 3


def jacobian(f, x, h: float | None = None):
    """Stack of partial derivatives along a new trailing axis."""
    x = np.asarray(x, dtype=float)
    parts = [derivative(f, x, e, h) for e in np.eye(len(x))]
    return np.stack(parts, axis=-1)


def hessian(f, x, h: float | None = None):
    """Nested central differences; symmetrized."""
    H = jacobian(lambda z: jacobian(f, z, h), x, h)
    return 0.5 * (H + np.swapaxes(H, -1, -2))
