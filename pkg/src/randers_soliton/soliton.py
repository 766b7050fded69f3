"""Killing/Douglas/Berwald criteria, Lie derivatives and Ricci-soliton fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import chart, curvature
from . import jet as jt
from . import riemann
from .lie_algebra import DerivationBasis, NilpotentAlgebra, derivation_basis, leibniz_residual
from .randers import RandersStructure, TangentSample, fundamental_tensor

CRITERION_TOL = 1e-10
FLOW_KILLING_TOL = 1e-6
STEADY_THRESHOLD = 1e-8


# structural criteria ----------------------------------------------------------

@dataclass
class Verdict:
    holds: bool
    residual: float
    witness: tuple | None = None


def douglas_check(s: RandersStructure, tol: float = CRITERION_TOL) -> Verdict:
    """a(X, [e_i, e_j]) = 0 for all basis pairs."""
    vals = np.einsum("ijk,k->ij", s.alg.c, s.b_e)
    i, j = np.unravel_index(np.argmax(np.abs(vals)), vals.shape)
    res = float(abs(vals[i, j]))
    return Verdict(res <= tol, res, (int(i) + 1, int(j) + 1, float(vals[i, j])))


def berwald_check(s: RandersStructure, tol: float = CRITERION_TOL) -> Verdict:
    """X parallel for the Levi-Civita connection of A."""
    cov = riemann.covariant_derivative_of(s.alg, s.A, s.X_e)
    res = float(np.max(np.abs(cov), initial=0.0))
    witness = None
    if res > 0:
        m, i = np.unravel_index(np.argmax(np.abs(cov)), cov.shape)
        witness = (int(i) + 1, cov[:, i].tolist())
    return Verdict(res <= tol, res, witness)


def killing_check(s: RandersStructure, X=None, tol: float = CRITERION_TOL) -> Verdict:
    X = s.X_e if X is None else np.asarray(X, dtype=float)
    ok, res = riemann.is_killing_left_invariant(s.alg, s.A, X, tol)
    return Verdict(ok, res)


def lie_derivative_of_metric(alg: NilpotentAlgebra, A, X_e, x) -> np.ndarray:
    """(L_X a)_x for left-invariant X, differentiating the pullback along x -> x exp(tX)."""
    n = alg.dim
    basis = jt.get_basis(n, 1, 2, 1)
    xi = jt.Jet.seed(basis, x, 0)
    t = jt.Jet.seed(basis, [0.0], n)[0]
    phi = chart.group_multiply(alg, xi, t * np.asarray(X_e, dtype=float))
    J = phi.gradient(list(range(n)))  # [i, j] = d phi^i / d x^j
    a_phi = chart.metric_in_coordinates(alg, A, phi)
    pulled = J.T @ (a_phi @ J)
    return pulled.coefficient(np.eye(n + 1, dtype=np.int64)[n])


def killing_flow_check(s: RandersStructure, X=None, points=None, tol: float = FLOW_KILLING_TOL) -> Verdict:
    """Flow-based Killing test: max |L_X a| over chart points."""
    X = s.X_e if X is None else np.asarray(X, dtype=float)
    if points is None:
        points = default_chart_points(s.dim)
    res = max(float(np.max(np.abs(lie_derivative_of_metric(s.alg, s.A, X, p)))) for p in points)
    return Verdict(res <= tol, res)


def default_chart_points(n: int, count: int = 5, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.vstack([np.zeros(n), rng.normal(scale=0.7, size=(count - 1, n))])


# vector fields and complete lifts --------------------------------------------

class LeftInvariantField:
    def __init__(self, alg: NilpotentAlgebra, V_e):
        self.alg = alg
        self.V_e = np.asarray(V_e, dtype=float)

    def __call__(self, x):
        return chart.frame_matrix(self.alg, x) @ self.V_e


class LinearField:
    """V(x) = B x."""

    def __init__(self, B):
        self.B = np.asarray(B, dtype=float)

    def __call__(self, x):
        return self.B @ x


class PolynomialField:
    """V^i(x) = sum over terms (i, coeff, exponents) of coeff * prod_k x_k^e_k."""

    def __init__(self, dim: int, terms):
        self.dim = dim
        self.terms = [(int(i), float(c), tuple(int(e) for e in exps)) for i, c, exps in terms]

    def __call__(self, x):
        comps = [None] * self.dim
        for i, c, exps in self.terms:
            mono = c
            for k, e in enumerate(exps):
                for _ in range(e):
                    mono = mono * x[k]
            comps[i] = mono if comps[i] is None else comps[i] + mono
        zero = x[0] * 0.0
        return jt.stack([zero + 0.0 if v is None else zero + v for v in comps])


def lie_derivative_fundamental(s: RandersStructure, V, sample: TangentSample) -> np.ndarray:
    """(L_{V^c} g)_(x,y) = d/dt g_(phi_t x, dphi_t y)(dphi_t ., dphi_t .) at t = 0.

    The flow enters only through its first-order jet, so one explicit Euler
    step phi_t(x) = x + t V(x) is exact here.
    """
    n = s.dim
    xb = jt.get_basis(n, 0, 1)
    Vx = V(jt.Jet.seed(xb, sample.x, 0))
    if not jt.is_jet(Vx):
        Vx = jt.Jet.constant(xb, Vx)
    V0 = Vx.value
    DV = Vx.gradient(list(range(n))).value  # [i, j] = d V^i / d x^j
    tb = jt.get_basis(0, 1, 1)
    t = jt.Jet.seed(tb, [0.0], 0)[0]
    phi = t * V0 + sample.x
    J = t * DV + np.eye(n)
    g_t = fundamental_tensor(s, phi, J @ sample.y)
    pulled = J.T @ (g_t @ J)
    L = pulled.coefficient([1])
    return 0.5 * (L + L.T)


def soliton_residual(s: RandersStructure, V, c: float, samples) -> float:
    """RMS over samples of |ric_F - c g - L_{V^c} g|_F."""
    errs = []
    for smp in samples:
        ric = curvature.akbar_zadeh(s, smp)
        g = curvature.expansion(s, smp, "ricci").g.value
        L = lie_derivative_fundamental(s, V, smp)
        errs.append(np.linalg.norm(ric - c * g - L))
    return float(np.sqrt(np.mean(np.square(errs))))


# semialgebraic fit ------------------------------------------------------------

def sphere_directions(A, count: int, seed: int = 0) -> np.ndarray:
    """Scrambled-Sobol directions with y^T A y = 1."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        u = sampler.random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    L = np.linalg.cholesky(A)
    return np.linalg.solve(L.T, z.T).T


def classify(c: float, threshold: float = STEADY_THRESHOLD) -> str:
    if c > threshold:
        return "shrinking"
    if c < -threshold:
        return "expanding"
    return "steady"


@dataclass
class SolitonFit:
    c: float
    D: np.ndarray
    residual: float
    classification: str
    per_sample: np.ndarray
    rank_deficient: bool
    leibniz_residual: float
    coefficients: np.ndarray = field(repr=False)

    def symmetric_part(self, metric=None) -> np.ndarray:
        """1/2 (D + D^t) with the transpose taken w.r.t. ``metric`` (Euclidean if None)."""
        if metric is None:
            return 0.5 * (self.D + self.D.T)
        metric = np.asarray(metric, dtype=float)
        return 0.5 * (self.D + np.linalg.solve(metric, self.D.T @ metric))

    def quantiles(self) -> dict:
        q = np.quantile(self.per_sample, [0.0, 0.5, 0.9, 1.0])
        return {"min": float(q[0]), "median": float(q[1]), "p90": float(q[2]), "max": float(q[3])}


def _fit(ricci_ops, metrics, der: DerivationBasis, alg: NilpotentAlgebra) -> SolitonFit:
    """Least squares for Ric_s = c Id + 1/2 (D + g_s^{-1} D^T g_s) over all samples."""
    n = alg.dim
    rows, rhs = [], []
    for Ric, g in zip(ricci_ops, metrics):
        cols = [np.eye(n).ravel()]
        for Dm in der.generators:
            cols.append((0.5 * (Dm + np.linalg.solve(g, Dm.T @ g))).ravel())
        rows.append(np.column_stack(cols))
        rhs.append(np.asarray(Ric).ravel())
    M = np.vstack(rows)
    b = np.concatenate(rhs)
    sol, _, rank, _ = np.linalg.lstsq(M, b, rcond=1e-10)
    fitted = (M @ sol - b).reshape(len(ricci_ops), n * n)
    per = np.linalg.norm(fitted, axis=1)
    c = float(sol[0])
    D = der.combine(sol[1:]) if der.dim_der else np.zeros((n, n))
    return SolitonFit(
        c=c,
        D=D,
        residual=float(np.sqrt(np.mean(per**2))),
        classification=classify(c),
        per_sample=per,
        rank_deficient=bool(rank < M.shape[1]),
        leibniz_residual=leibniz_residual(alg, D),
        coefficients=sol,
    )


def semialgebraic_fit(s: RandersStructure, directions, der: DerivationBasis | None = None) -> SolitonFit:
    """One (c, D) for Ric_F(e, y) = c Id + 1/2 (D + D^t) across all sampled y."""
    directions = np.asarray(directions, dtype=float)
    if len(directions) < 2:
        raise ValueError("the fit needs at least two directions")
    der = derivation_basis(s.alg) if der is None else der
    zero = np.zeros(s.dim)
    ops, metrics = [], []
    for y in directions:
        smp = TangentSample(zero, y)
        e = curvature.expansion(s, smp, "ricci")
        g = e.g.value
        ops.append(np.linalg.solve(g, curvature.akbar_zadeh(s, smp)))
        metrics.append(g)
    return _fit(ops, metrics, der, s.alg)


def per_sample_fits(s: RandersStructure, directions, der: DerivationBasis | None = None) -> list[SolitonFit]:
    """Diagnostic: a separate (c, D) for every direction."""
    der = derivation_basis(s.alg) if der is None else der
    zero = np.zeros(s.dim)
    out = []
    for y in np.asarray(directions, dtype=float):
        smp = TangentSample(zero, y)
        g = curvature.expansion(s, smp, "ricci").g.value
        out.append(_fit([np.linalg.solve(g, curvature.akbar_zadeh(s, smp))], [g], der, s.alg))
    return out


def lauret_fit(alg: NilpotentAlgebra, A, der: DerivationBasis | None = None) -> SolitonFit:
    """Riemannian nilsoliton fit Ric = c Id + 1/2 (D + D^t), transpose w.r.t. A."""
    der = derivation_basis(alg) if der is None else der
    return _fit([riemann.ricci_operator(alg, A)], [np.asarray(A, dtype=float)], der, alg)


def riemannian_soliton_residual(alg: NilpotentAlgebra, A, X_e, lam: float) -> float:
    """|L_X a - 2(lam a - ric)|_F for a left-invariant field X (Riemannian convention)."""
    L = lie_derivative_of_metric(alg, A, X_e, np.zeros(alg.dim))
    ric = riemann.riemannian_ricci(alg, A)
    return float(np.linalg.norm(L - 2 * (lam * np.asarray(A) - ric)))
