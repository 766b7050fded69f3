"""Global exponential coordinates on the simply connected group.

Every function here is generic over the scalar type: inputs may be numpy
arrays or :class:`~randers_soliton.jet.Jet` arrays.
"""

from __future__ import annotations

import math

import numpy as np

from . import jet as jt
from .lie_algebra import MAX_CLASS, NilpotentAlgebra

# Taylor coefficients of z / (1 - exp(-z)), i.e. B_k^+ / k!
_PSI = (1.0, 1 / 2, 1 / 12, 0.0, -1 / 720, 0.0, 1 / 30240, 0.0, -1 / 1209600)


def _bracket(alg, u, v):
    return alg.ad(u) @ v


def group_multiply(alg: NilpotentAlgebra, x, y):
    """BCH product in exponential coordinates, exact for class <= 4."""
    if alg.class_bound > MAX_CLASS:
        raise ValueError(f"group law implemented for nilpotency class <= {MAX_CLASS}")
    xy = _bracket(alg, x, y)
    z = x + y
    if alg.class_bound >= 2:
        z = z + 0.5 * xy
    if alg.class_bound >= 3:
        x_xy = _bracket(alg, x, xy)
        y_yx = -_bracket(alg, y, xy)
        z = z + (x_xy + y_yx) * (1 / 12)
    if alg.class_bound >= 4:
        z = z - _bracket(alg, y, _bracket(alg, x, xy)) * (1 / 24)
    return z


def inverse(x):
    return -x


def _operator_series(alg: NilpotentAlgebra, x, coeffs):
    """sum_k coeffs[k] ad_x^k, truncated where ad_x is nilpotent."""
    n = alg.dim
    ad = alg.ad(x)
    out = np.eye(n) * coeffs[0] + ad * coeffs[1]
    power = ad
    for k in range(2, min(n, alg.class_bound + 1, len(coeffs))):
        power = power @ ad
        if coeffs[k] != 0.0:
            out = out + power * coeffs[k]
    return out


def frame_matrix(alg: NilpotentAlgebra, x):
    """Columns are the coordinate components of the left-invariant fields at x."""
    return _operator_series(alg, x, _PSI)


def inverse_frame(alg: NilpotentAlgebra, x):
    """(1 - exp(-ad_x)) / ad_x, the exact inverse of :func:`frame_matrix`."""
    coeffs = [(-1.0) ** k / math.factorial(k + 1) for k in range(alg.dim + 1)]
    return _operator_series(alg, x, coeffs)


def metric_in_coordinates(alg: NilpotentAlgebra, A, x):
    W = inverse_frame(alg, x)
    return W.T @ (np.asarray(A, dtype=float) @ W)


def vector_in_coordinates(alg: NilpotentAlgebra, X_e, x):
    return frame_matrix(alg, x) @ np.asarray(X_e, dtype=float)


def one_form_in_coordinates(alg: NilpotentAlgebra, A, X_e, x):
    """b(x) = a(x) X(x) = W(x)^T A X_e."""
    b_e = np.asarray(A, dtype=float) @ np.asarray(X_e, dtype=float)
    return inverse_frame(alg, x).T @ b_e


def check_frame(alg: NilpotentAlgebra, x) -> None:
    M = jt.value(frame_matrix(alg, x))
    det = np.linalg.det(M)
    if not np.isfinite(det) or abs(det) < 1e-12:
        raise ArithmeticError("singular frame matrix; the algebra is not nilpotent")
