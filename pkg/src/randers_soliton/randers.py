"""Left-invariant Randers metrics F = sqrt(a(y, y)) + a(X, y)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chart
from . import jet as jt
from .lie_algebra import NilpotentAlgebra
from .riemann import check_spd

ADMISSIBILITY_MARGIN = 1e-12


class StructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RandersStructure:
    """Inner product ``A`` at the identity and left-invariant ``X_e`` with |X_e|_A < 1."""

    alg: NilpotentAlgebra
    A: np.ndarray
    X_e: np.ndarray

    def __post_init__(self):
        n = self.alg.dim
        try:
            A = check_spd(self.A)
        except ValueError as exc:
            raise StructureError(str(exc)) from exc
        X = np.array(self.X_e, dtype=float)
        if A.shape != (n, n) or X.shape != (n,):
            raise StructureError(f"metric must be {n}x{n} and vector of length {n}")
        if np.sqrt(X @ A @ X) >= 1.0 - ADMISSIBILITY_MARGIN:
            raise StructureError(f"Randers admissibility violated: |X|_A = {np.sqrt(X @ A @ X):.6g} >= 1")
        A = A.copy()
        A.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "X_e", X)

    @property
    def dim(self) -> int:
        return self.alg.dim

    @property
    def b_e(self) -> np.ndarray:
        """Covector of beta at the identity, A X_e."""
        return self.A @ self.X_e

    @property
    def x_norm(self) -> float:
        return float(np.sqrt(self.X_e @ self.A @ self.X_e))

    @property
    def is_riemannian(self) -> bool:
        return not np.any(self.X_e)

    def with_metric(self, A) -> "RandersStructure":
        return RandersStructure(self.alg, A, self.X_e)

    def with_vector(self, X_e) -> "RandersStructure":
        return RandersStructure(self.alg, self.A, X_e)


@dataclass(frozen=True)
class TangentSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be vectors of equal length")
        if not np.any(y):
            raise ValueError("Finsler quantities are undefined at y = 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def _split(sample_or_x, y=None):
    if isinstance(sample_or_x, TangentSample):
        return sample_or_x.x, sample_or_x.y
    return sample_or_x, y


def identity_coordinates(s: RandersStructure, x, y):
    """Left-invariant components W(x) y of the tangent vector y at x."""
    return chart.inverse_frame(s.alg, x) @ y


def alpha_beta(s: RandersStructure, x, y):
    v = identity_coordinates(s, x, y)
    alpha = jt.sqrt(v @ (s.A @ v))
    beta = v @ s.b_e
    return alpha, beta


def randers_norm(s: RandersStructure, x, y=None):
    """F(x, y); generic over jets."""
    x, y = _split(x, y)
    if not jt.is_jet(y) and not np.any(y):
        raise ValueError("F is evaluated on nonzero vectors only")
    alpha, beta = alpha_beta(s, x, y)
    return alpha + beta


def randers_norm_squared(s: RandersStructure, x, y):
    F = randers_norm(s, x, y)
    return F * F


def fundamental_tensor(s: RandersStructure, x, y=None):
    """Closed form g_ij = (F/alpha)(a_ij - l_i l_j) + (l_i + b_i)(l_j + b_j), l = a y / alpha."""
    x, y = _split(x, y)
    if not jt.is_jet(y) and not np.any(y):
        raise ValueError("g is defined on nonzero vectors only")
    a = chart.metric_in_coordinates(s.alg, s.A, x)
    b = chart.one_form_in_coordinates(s.alg, s.A, s.X_e, x)
    ay = a @ y
    alpha = jt.sqrt(y @ ay)
    inv_alpha = 1.0 / alpha
    ell = ay * inv_alpha
    F = alpha + b @ y
    lb = ell + b
    return (a - ell[:, None] * ell[None, :]) * (F * inv_alpha) + lb[:, None] * lb[None, :]


def cartan_tensor(s: RandersStructure, x, y=None) -> np.ndarray:
    """C_ijk = 1/2 dg_ij/dy^k, by forward differentiation of the closed form."""
    x, y = _split(x, y)
    n = s.dim
    basis = jt.get_basis(0, n, 1)
    yj = jt.Jet.seed(basis, y, 0)
    g = fundamental_tensor(s, np.asarray(x, dtype=float), yj)
    C = 0.5 * np.stack([g.diff(k).value for k in range(n)], axis=-1)
    # symmetrize away roundoff
    return (C + C.transpose(1, 2, 0) + C.transpose(2, 0, 1) + C.transpose(0, 2, 1)
            + C.transpose(2, 1, 0) + C.transpose(1, 0, 2)) / 6.0
