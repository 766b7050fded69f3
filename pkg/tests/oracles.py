"""Riemannian quantities from the structure-constant oracle, pushed into exponential coordinates."""

import numpy as np

from randers_soliton import chart, riemann


def frames(alg, x):
    return chart.frame_matrix(alg, x), chart.inverse_frame(alg, x)


def gamma(alg, A, x):
    return riemann.coordinate_christoffel(alg, A, x)


def spray(alg, A, x, y):
    return 0.5 * np.einsum("ijk,j,k->i", gamma(alg, A, x), y, y)


def nonlinear(alg, A, x, y):
    return np.einsum("ijk,k->ij", gamma(alg, A, x), y)


def riemann_op(alg, A, x, y):
    """Coordinate matrix of u -> R(u, y) y."""
    M, W = frames(alg, x)
    return M @ riemann.riemann_operator(alg, A, W @ y) @ W


def ricci_form(alg, A, x):
    _, W = frames(alg, x)
    return W.T @ riemann.riemannian_ricci(alg, A) @ W


def ricci_scalar(alg, A, x, y):
    return float(y @ ricci_form(alg, A, x) @ y)


def sectional(alg, A, x, y, u):
    _, W = frames(alg, x)
    return riemann.sectional_curvature(alg, A, W @ u, W @ y)
