"""Connection and curvature of a left-invariant Randers metric in exponential coordinates.

Everything is read off one truncated Taylor expansion of F^2 around the
sample (x, y).  Perturbation variables are ordered (dx_1..dx_n, dy_1..dy_n).
The depth of the expansion is chosen per quantity:

    level   F^2 degree  x-degree   provides
    "g"          2          0      g
    "conn"       3          1      gamma, C, G, N, Chern Gamma
    "curv"       4          2      R_(x,y), flag curvature, Ric
    "ricci"      6          2      Akbar-Zadeh ric_F and Ric_op
"""

from __future__ import annotations

import collections
import functools
import threading
from dataclasses import dataclass

import numpy as np

from . import jet as jt
from .randers import RandersStructure, TangentSample, randers_norm_squared

LEVELS = {"g": (2, 0), "conn": (3, 1), "curv": (4, 2), "ricci": (6, 2)}


class FlagError(ValueError):
    pass


class Expansion:
    """Jets of F^2 and the spray at one tangent sample."""

    def __init__(self, structure: RandersStructure, x, y, level: str = "ricci"):
        n = structure.dim
        self.structure = structure
        self.n = n
        self.x = np.array(x, dtype=float)
        self.y = np.array(y, dtype=float)
        if not np.any(self.y):
            raise ValueError("curvature is undefined at y = 0")
        self.level = level
        degree, xdegree = LEVELS[level]
        self.basis = jt.get_basis(n, n, degree, xdegree)
        self.xvars = list(range(n))
        self.yvars = list(range(n, 2 * n))
        # x is a perturbation variable only when x-derivatives are requested
        self.xj = jt.Jet.seed(self.basis, self.x, 0) if xdegree else self.x
        self.yj = jt.Jet.seed(self.basis, self.y, n)
        self.F2 = randers_norm_squared(structure, self.xj, self.yj)

    @functools.cached_property
    def dF2_dy(self):
        return self.F2.gradient(self.yvars)

    @functools.cached_property
    def g(self) -> jt.Jet:
        """1/2 d^2 F^2 / dy dy as a jet."""
        return self.dF2_dy.gradient(self.yvars) * 0.5

    @functools.cached_property
    def G(self) -> jt.Jet:
        """Spray coefficients 1/4 g^{il} ([F^2]_{x^m y^l} y^m - [F^2]_{x^l})."""
        mixed = self.dF2_dy.gradient(self.xvars)  # [l, m] = d_x^m d_y^l F^2
        dx = self.F2.gradient(self.xvars)
        rhs = mixed @ self.yj - dx
        return jt.inv(self.g) @ rhs * 0.25

    @functools.cached_property
    def R(self) -> jt.Jet:
        """R^i_k = 2 G^i_{x^k} - y^j G^i_{x^j y^k} + 2 G^j G^i_{y^j y^k} - G^i_{y^j} G^j_{y^k}."""
        G = self.G
        Gx = G.gradient(self.xvars)
        Gy = G.gradient(self.yvars)
        Gxy = Gy.gradient(self.xvars)  # [i, k, j] = d_x^j d_y^k G^i
        Gyy = Gy.gradient(self.yvars)  # [i, j, k]
        y = self.yj
        term2 = (Gxy * y[None, None, :]).sum(axis=2)
        term3 = (Gyy * G[None, :, None]).sum(axis=1)
        return Gx * 2.0 - term2 + term3 * 2.0 - Gy @ Gy

    @functools.cached_property
    def ric(self) -> jt.Jet:
        return jt.trace(self.R)


_CACHE: collections.OrderedDict = collections.OrderedDict()
_CACHE_SIZE = 256
_ORDER = list(LEVELS)
_LOCK = threading.Lock()


def expansion(structure: RandersStructure, sample: TangentSample, level: str = "ricci") -> Expansion:
    """Cached expansion; a deeper one already built serves shallower requests."""
    key = (id(structure), sample.x.tobytes(), sample.y.tobytes())
    with _LOCK:
        hit = _CACHE.get(key)
        if hit is not None and hit[0] is structure and _ORDER.index(hit[1].level) >= _ORDER.index(level):
            _CACHE.move_to_end(key)
            return hit[1]
    e = Expansion(structure, sample.x, sample.y, level)
    with _LOCK:
        _CACHE[key] = (structure, e)
        if len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return e


def _sample(sample, y=None) -> TangentSample:
    if isinstance(sample, TangentSample):
        return sample
    return TangentSample(sample, y)


# operations ----------------------------------------------------------------------

def fundamental_tensor_from_definition(structure, sample, y=None) -> np.ndarray:
    """g as the y-Hessian of F^2 / 2 (the derivative route)."""
    return expansion(structure, _sample(sample, y), "g").g.value


def christoffel_gamma(structure, sample, y=None) -> np.ndarray:
    """gamma[i, j, k] = 1/2 g^{is} (g_sj,k - g_jk,s + g_ks,j)."""
    e = expansion(structure, _sample(sample, y), "conn")
    dg = e.g.gradient(e.xvars).value  # [s, j, k] = d_k g_sj
    # transpose (2,0,1)[s,j,k] = d_s g_jk; (1,2,0)[s,j,k] = d_j g_ks
    lower = 0.5 * (dg - dg.transpose(2, 0, 1) + dg.transpose(1, 2, 0))
    return np.einsum("is,sjk->ijk", np.linalg.inv(e.g.value), lower)


def spray(structure, sample, y=None) -> np.ndarray:
    return expansion(structure, _sample(sample, y), "conn").G.value


def spray_jacobian(structure, sample, y=None) -> np.ndarray:
    """dG^i / dy^j."""
    e = expansion(structure, _sample(sample, y), "conn")
    return e.G.gradient(e.yvars).value


def cartan_from_definition(structure, sample, y=None) -> np.ndarray:
    """C_ijk = 1/4 (F^2)_{y^i y^j y^k}."""
    e = expansion(structure, _sample(sample, y), "conn")
    return 0.5 * e.g.gradient(e.yvars).value


def nonlinear_connection(structure, sample, y=None) -> np.ndarray:
    """N^i_j = gamma^i_jk y^k - C^i_jk gamma^k_rs y^r y^s."""
    s = _sample(sample, y)
    e = expansion(structure, s, "conn")
    gam = christoffel_gamma(structure, s)
    C = cartan_from_definition(structure, s)
    C_up = np.einsum("is,sjk->ijk", np.linalg.inv(e.g.value), C)
    yy = np.einsum("krs,r,s->k", gam, s.y, s.y)
    return np.einsum("ijk,k->ij", gam, s.y) - np.einsum("ijk,k->ij", C_up, yy)


def chern_connection(structure, sample, y=None) -> np.ndarray:
    """Gamma[i, j, k] built from delta/delta x^j = d/dx^j - N^l_j d/dy^l."""
    s = _sample(sample, y)
    e = expansion(structure, s, "conn")
    N = nonlinear_connection(structure, s)
    dgx = e.g.gradient(e.xvars).value  # [s, j, k] = d_x^k g_sj
    dgy = e.g.gradient(e.yvars).value  # [s, j, l] = d_y^l g_sj
    dg = dgx - np.einsum("sjl,lk->sjk", dgy, N)
    # transpose (2,0,1)[s,j,k] = d_s g_jk; (1,2,0)[s,j,k] = d_j g_ks
    lower = 0.5 * (dg - dg.transpose(2, 0, 1) + dg.transpose(1, 2, 0))
    return np.einsum("is,sjk->ijk", np.linalg.inv(e.g.value), lower)


def riemann_operator(structure, sample, y=None) -> np.ndarray:
    return expansion(structure, _sample(sample, y), "curv").R.value


def flag_curvature(structure, sample, u, y=None) -> float:
    s = _sample(sample, y)
    e = expansion(structure, s, "curv")
    g = e.g.value
    R = e.R.value
    u = np.asarray(u, dtype=float)
    gyy, guu, gyu = s.y @ g @ s.y, u @ g @ u, s.y @ g @ u
    denom = gyy * guu - gyu**2
    if denom <= 1e-14 * gyy * guu:
        raise FlagError("flag is degenerate: u is parallel to y")
    return float((R @ u) @ g @ u / denom)


def ricci_scalar(structure, sample, y=None) -> float:
    return float(expansion(structure, _sample(sample, y), "curv").ric.value)


def g_orthonormal_completion(g: np.ndarray, y: np.ndarray, F: float) -> np.ndarray:
    """Columns e_1..e_{n-1}, y/F orthonormal under g (Gram-Schmidt, largest remaining norm first)."""
    n = len(y)
    pole = y / F
    done = [pole]
    pool = [v for v in np.eye(n)]
    basis = []
    while len(basis) < n - 1:
        best, best_norm = None, -1.0
        for idx, v in enumerate(pool):
            w = v.copy()
            for q in done:
                w = w - (q @ g @ w) * q
            norm = np.sqrt(max(w @ g @ w, 0.0))
            if norm > best_norm:
                best, best_norm, best_idx = w, norm, idx
        pool.pop(best_idx)
        q = best / best_norm
        done.append(q)
        basis.append(q)
    return np.column_stack(basis + [pole])


def ricci_flag_sum(structure, sample, y=None) -> float:
    """F^2 * sum_i K(span{e_i, y}) over a g-orthonormal completion of y/F."""
    s = _sample(sample, y)
    e = expansion(structure, s, "curv")
    F = float(np.sqrt(e.F2.value))
    frame = g_orthonormal_completion(e.g.value, s.y, F)
    total = sum(flag_curvature(structure, s, frame[:, i]) for i in range(len(s.y) - 1))
    return F**2 * total


def akbar_zadeh(structure, sample, y=None) -> np.ndarray:
    """ric_F = 1/2 y-Hessian of Ric."""
    e = expansion(structure, _sample(sample, y), "ricci")
    H = e.ric.gradient(e.yvars).gradient(e.yvars).value
    H = 0.5 * H
    return 0.5 * (H + H.T)


def ricci_operator(structure, sample, y=None) -> np.ndarray:
    """Ric_op = g^{-1} ric_F."""
    s = _sample(sample, y)
    e = expansion(structure, s, "ricci")
    return np.linalg.solve(e.g.value, akbar_zadeh(structure, s))


@dataclass
class CurvatureValue:
    F: float
    g: np.ndarray
    cartan_norm: float
    spray: np.ndarray
    R_op: np.ndarray
    ric_scalar: float
    ric_F: np.ndarray
    Ric_op: np.ndarray


def evaluate(structure, sample, y=None) -> CurvatureValue:
    s = _sample(sample, y)
    e = expansion(structure, s, "ricci")
    ricF = akbar_zadeh(structure, s)
    return CurvatureValue(
        F=float(np.sqrt(e.F2.value)),
        g=e.g.value,
        cartan_norm=float(np.linalg.norm(0.5 * e.g.gradient(e.yvars).value)),
        spray=e.G.value,
        R_op=e.R.value,
        ric_scalar=float(e.ric.value),
        ric_F=ricF,
        Ric_op=np.linalg.solve(e.g.value, ricF),
    )


@dataclass
class QuadraticFit:
    quadratic: bool
    deviation: float
    form: np.ndarray


def ricci_quadratic_check(structure, x, directions, tol: float = 1e-6) -> QuadraticFit:
    """Least-squares fit of Ric(x, .) by a quadratic form over the given directions."""
    n = structure.dim
    directions = np.asarray(directions, dtype=float)
    npar = n * (n + 1) // 2
    if len(directions) < npar + 5:
        raise ValueError(f"need at least {npar + 5} directions, got {len(directions)}")
    iu = np.triu_indices(n)
    weight = np.where(iu[0] == iu[1], 1.0, 2.0)
    design = np.array([weight * np.outer(y, y)[iu] for y in directions])
    values = np.array([ricci_scalar(structure, TangentSample(x, y)) for y in directions])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = design @ coef - values
    scale = max(np.max(np.abs(values)), 1e-300)
    deviation = float(np.max(np.abs(resid)) / scale) if np.max(np.abs(values)) > 1e-14 else 0.0
    Q = np.zeros((n, n))
    Q[iu] = coef
    Q = Q + np.triu(Q, 1).T
    return QuadraticFit(deviation <= tol, deviation, Q)
