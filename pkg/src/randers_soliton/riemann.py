"""Left-invariant Riemannian geometry from structure constants alone.

Nothing here touches the chart or the Finsler machinery except the
``coordinate_*`` helpers at the end, which push the left-invariant data
into exponential coordinates for comparison with the coordinate pipeline.
"""

from __future__ import annotations

import numpy as np

from . import chart
from . import jet as jt
from .lie_algebra import NilpotentAlgebra


class MetricError(ValueError):
    pass


def check_spd(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MetricError(f"{name} must be square")
    if not np.allclose(A, A.T, atol=1e-12, rtol=0):
        raise MetricError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise MetricError(f"{name} is not positive definite")
    return A


def levi_civita(alg: NilpotentAlgebra, A) -> np.ndarray:
    """nabla[i, j, :] are the components of nabla_{e_i} e_j (Koszul formula)."""
    A = check_spd(A)
    # B[i,j,k] = <[e_i,e_j], e_k>
    B = np.einsum("ijl,lk->ijk", alg.c, A)
    # transpose (2,0,1) gives B[j,k,i]; (1,2,0) gives B[k,i,j]
    lower = 0.5 * (B - np.transpose(B, (2, 0, 1)) + np.transpose(B, (1, 2, 0)))
    return np.einsum("mk,ijk->ijm", np.linalg.inv(A), lower)


def connection_matrices(nabla: np.ndarray) -> np.ndarray:
    """Gamma[i] is the matrix of w -> nabla_{e_i} w."""
    return np.transpose(nabla, (0, 2, 1))


def curvature_tensor(alg: NilpotentAlgebra, A) -> np.ndarray:
    """riem[i, j, k, :] = R(e_i, e_j) e_k with R(u,v) = [nabla_u, nabla_v] - nabla_[u,v]."""
    G = connection_matrices(levi_civita(alg, A))
    comm = np.einsum("imn,jnk->ijmk", G, G)
    comm = comm - np.transpose(comm, (1, 0, 2, 3))
    R = comm - np.einsum("ijl,lmk->ijmk", alg.c, G)
    return np.transpose(R, (0, 1, 3, 2))


def riemannian_ricci(alg: NilpotentAlgebra, A) -> np.ndarray:
    riem = curvature_tensor(alg, A)
    ric = np.einsum("ijki->jk", riem)
    return 0.5 * (ric + ric.T)


def scalar_curvature(alg: NilpotentAlgebra, A) -> float:
    A = check_spd(A)
    return float(np.trace(np.linalg.solve(A, riemannian_ricci(alg, A))))


def ricci_operator(alg: NilpotentAlgebra, A) -> np.ndarray:
    """(1,1) Ricci tensor A^{-1} ric."""
    A = check_spd(A)
    return np.linalg.solve(A, riemannian_ricci(alg, A))


def sectional_curvature(alg: NilpotentAlgebra, A, u, v) -> float:
    A = check_spd(A)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    denom = (u @ A @ u) * (v @ A @ v) - (u @ A @ v) ** 2
    if denom <= 1e-14 * (u @ A @ u) * (v @ A @ v):
        raise ValueError("degenerate plane: u and v are parallel")
    riem = curvature_tensor(alg, A)
    Ruvv = np.einsum("i,j,k,ijkm->m", u, v, v, riem)
    return float(Ruvv @ A @ u / denom)


def riemann_operator(alg: NilpotentAlgebra, A, y) -> np.ndarray:
    """Matrix of u -> R(u, y) y in the basis e_i."""
    riem = curvature_tensor(alg, A)
    return np.einsum("j,k,ijkm->mi", y, y, riem)


def killing_residual(alg: NilpotentAlgebra, A, X) -> float:
    """max |<[X,u],v> + <u,[X,v]>| over basis vectors."""
    A = np.asarray(A, dtype=float)
    adX = alg.ad(np.asarray(X, dtype=float))
    S = adX.T @ A + A @ adX
    return float(np.max(np.abs(S), initial=0.0))


def is_killing_left_invariant(alg: NilpotentAlgebra, A, X, tol: float = 1e-10) -> tuple[bool, float]:
    res = killing_residual(alg, A, X)
    return res <= tol, res


def covariant_derivative_of(alg: NilpotentAlgebra, A, X) -> np.ndarray:
    """Column i is nabla_{e_i} X for the left-invariant field X."""
    nabla = levi_civita(alg, A)
    return np.einsum("j,ijm->mi", np.asarray(X, dtype=float), nabla)


# chart transport (oracle side) -------------------------------------------------

def coordinate_christoffel(alg: NilpotentAlgebra, A, x) -> np.ndarray:
    """Levi-Civita symbols gamma[c, a, b] of a(x) from the left-invariant table.

    With d_b = sum_j W[j, b] E_j (W = inverse frame):
    nabla_{d_a} d_b = sum_j (d_a W[j,b]) E_j + W[i,a] W[j,b] nabla_{E_i} E_j.
    """
    n = alg.dim
    basis = jt.get_basis(n, 0, 1)
    xj = jt.Jet.seed(basis, x, 0)
    Wj = chart.inverse_frame(alg, xj)
    W = Wj.value
    dW = np.stack([Wj.diff(a).value for a in range(n)])  # dW[a, j, b]
    M = jt.value(chart.frame_matrix(alg, np.asarray(x, dtype=float)))
    nabla = levi_civita(alg, A)
    term1 = np.einsum("cj,ajb->cab", M, dW)
    term2 = np.einsum("ck,ijk,ia,jb->cab", M, nabla, W, W)
    return term1 + term2
