"""Riemannian Ricci flow of left-invariant inner products and the Finslerian flow residual."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import curvature, riemann
from .lie_algebra import DerivationBasis, NilpotentAlgebra, derivation_basis
from .randers import RandersStructure, TangentSample
from .soliton import SolitonFit, lauret_fit

KINDS = ("unnormalized", "normalized")
DEFAULT_TOL = 1e-9
MIN_STEP = 1e-12
MIN_EIGENVALUE = 1e-10


class FlowError(RuntimeError):
    pass


def scalar_curvature(alg: NilpotentAlgebra, A) -> float:
    return float(np.trace(riemann.ricci_operator(alg, A)))


def flow_rhs(alg: NilpotentAlgebra, A, kind: str = "unnormalized") -> np.ndarray:
    """-2 ric, plus (2/n) sc A for the normalized flow."""
    if kind not in KINDS:
        raise ValueError(f"unknown flow kind {kind!r}")
    A = riemann.check_spd(A)
    ric = riemann.riemannian_ricci(alg, A)
    rhs = -2.0 * ric
    if kind == "normalized":
        sc = float(np.trace(np.linalg.solve(A, ric)))
        rhs = rhs + (2.0 / alg.dim) * sc * A
    return 0.5 * (rhs + rhs.T)


@dataclass
class FlowTrajectory:
    times: np.ndarray
    metrics: np.ndarray  # (steps, n, n)
    kind: str
    blow_up: bool = False
    rejected: int = 0
    tol: float | None = None
    min_eigenvalues: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.min_eigenvalues is None:
            self.min_eigenvalues = np.array([np.linalg.eigvalsh(m)[0] for m in self.metrics])

    @property
    def final(self) -> np.ndarray:
        return self.metrics[-1]

    def at(self, t: float) -> np.ndarray:
        """Metric at a recorded time (exact match required)."""
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-14))
        if not len(idx):
            raise KeyError(f"t = {t} is not a recorded time")
        return self.metrics[idx[0]]

    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.metrics)

    def det_drift(self) -> float:
        d = self.determinants()
        return float(np.max(np.abs(d - d[0])))

    def to_csv(self) -> str:
        n = self.metrics.shape[1]
        iu = np.triu_indices(n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"A{i + 1}{j + 1}" for i, j in zip(*iu)])
        for t, m in zip(self.times, self.metrics):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in m[iu]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "blow_up": self.blow_up,
                "times": [float(t) for t in self.times],
                "metrics": [m.tolist() for m in self.metrics],
            }
        )


def _rk4(f, A, h):
    """One classical step; None when an intermediate stage leaves the SPD cone."""
    try:
        return _rk4_unchecked(f, A, h)
    except riemann.MetricError:
        return None


def _rk4_unchecked(f, A, h):
    k1 = f(A)
    k2 = f(A + 0.5 * h * k1)
    k3 = f(A + 0.5 * h * k2)
    k4 = f(A + h * k3)
    return A + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _spd(A) -> bool:
    if A is None:
        return False
    return bool(np.linalg.eigvalsh(A)[0] > MIN_EIGENVALUE)


def integrate(
    alg: NilpotentAlgebra,
    A0,
    kind: str = "unnormalized",
    t_end: float = 1.0,
    tol: float = DEFAULT_TOL,
    h0: float = 1e-2,
    fixed_step: float | None = None,
    t_grid=None,
) -> FlowTrajectory:
    """RK4 with step-doubling error control; ``fixed_step`` disables adaptivity.

    Times in ``t_grid`` are hit exactly and recorded.  A step that shrinks
    below MIN_STEP, or a metric eigenvalue below MIN_EIGENVALUE, ends the run
    with ``blow_up`` set.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    A = riemann.check_spd(A0).copy()

    def f(M):
        return flow_rhs(alg, M, kind)

    stops = sorted({float(t) for t in (t_grid if t_grid is not None else ()) if 0 < t < t_end} | {t_end})
    times, metrics = [0.0], [A.copy()]
    t = 0.0
    h = fixed_step if fixed_step is not None else h0
    rejected = 0
    blow_up = False
    stop_idx = 0
    while stop_idx < len(stops):
        target = stops[stop_idx]
        step = min(h, target - t)
        if fixed_step is not None:
            new = _rk4(f, A, step)
            if not _spd(new):
                blow_up = True
                break
        else:
            full = _rk4(f, A, step)
            mid = _rk4(f, A, step / 2)
            half = _rk4(f, mid, step / 2) if _spd(mid) else None
            scale = max(1.0, float(np.max(np.abs(A))))
            ok = _spd(full) and _spd(half)
            err = float(np.max(np.abs(half - full))) / 15.0 if ok else np.inf
            if err > tol * scale:
                rejected += 1
                h = step / 2
                if h < MIN_STEP:
                    blow_up = True
                    break
                continue
            new = half + (half - full) / 15.0
            if not _spd(new):
                new = half
            growth = 2.0 if err == 0 else min(2.0, 0.9 * (tol * scale / err) ** 0.2)
            if step == h:
                h = step * growth
        t = target if abs(target - (t + step)) < 1e-14 else t + step
        A = 0.5 * (new + new.T)
        if t == target:
            stop_idx += 1
            times.append(t)
            metrics.append(A.copy())
        elif fixed_step is not None or t_grid is None:
            times.append(t)
            metrics.append(A.copy())
    return FlowTrajectory(np.array(times), np.array(metrics), kind, blow_up, rejected, tol if fixed_step is None else None)


def self_similarity_check(
    alg: NilpotentAlgebra,
    A0,
    fit: SolitonFit | None = None,
    t_grid=None,
    der: DerivationBasis | None = None,
    tol: float = DEFAULT_TOL,
) -> tuple[float, FlowTrajectory]:
    """Max refit residual of Ric(A(t)) = c(t) Id + sym D(t) along the unnormalized flow.

    ``fit`` is only used to confirm the starting metric was fitted; the
    refit at each grid time is independent.
    """
    der = derivation_basis(alg) if der is None else der
    grid = np.linspace(0.0, 0.5, 6) if t_grid is None else np.asarray(t_grid, dtype=float)
    t_end = float(grid.max())
    if t_end <= 0:
        return lauret_fit(alg, A0, der).residual, None
    traj = integrate(alg, A0, "unnormalized", t_end, tol=tol, t_grid=grid)
    if traj.blow_up:
        raise FlowError(f"flow blew up at t = {traj.times[-1]:.6g} before t_end = {t_end}")
    worst = 0.0
    for t in grid:
        A = A0 if t == 0 else traj.at(float(t))
        worst = max(worst, lauret_fit(alg, A, der).residual)
    return worst, traj


def finsler_flow_residual(s: RandersStructure, fit: SolitonFit, directions) -> float:
    """RMS over y of the t = 0 residual of the self-similar ansatz.

    The (0,2) residual tau'(0) g - g((D + D^t) ., .) + 2 ric_F with
    tau'(0) = -2c is raised with g^{-1} and halved, so that it is measured in
    the same (1,1) Frobenius norm as the fit.
    """
    tau_prime = -2.0 * fit.c
    zero = np.zeros(s.dim)
    errs = []
    for y in np.asarray(directions, dtype=float):
        smp = TangentSample(zero, y)
        g = curvature.expansion(s, smp, "ricci").g.value
        ric = curvature.akbar_zadeh(s, smp)
        form = tau_prime * g - (g @ fit.D + fit.D.T @ g) + 2.0 * ric
        errs.append(0.5 * np.linalg.norm(np.linalg.solve(g, form)))
    return float(np.sqrt(np.mean(np.square(errs))))
