"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` is an array whose entries are polynomials in perturbation
variables ``(xi_1..xi_nx, eta_1..eta_ny)`` truncated to the monomial set

    {m : |m| <= degree, |m_x| <= xdegree}

which is closed under taking divisors, so products and derivatives of
truncated polynomials are exact on that set.  Coefficients are Taylor
coefficients, i.e. ``d^m f = m! * coef[m]``.

The chart and metric code is written against the small surface shared by
numpy arrays and jets (``+ - * /``, ``@``, indexing, ``.T``) plus the
dispatching helpers at the bottom of this module, so the same functions
evaluate numerically or propagate derivatives.
"""

from __future__ import annotations

import functools
import math

import numpy as np
import scipy.sparse as sp


class JetBasis:
    """Monomial index set with cached product and derivative tables."""

    def __init__(self, nx: int, ny: int, degree: int, xdegree: int):
        if degree < 0 or xdegree < 0:
            raise ValueError("jet basis needs nonnegative degrees")
        self.nx, self.ny = nx, ny
        self.degree = degree
        self.xdegree = min(xdegree, degree)
        self.nvars = nx + ny
        exps = []
        for tot in range(degree + 1):
            for combo in _compositions(self.nvars, tot):
                if sum(combo[:nx]) <= self.xdegree:
                    exps.append(combo)
        self.exps = np.array(exps, dtype=np.int64).reshape(-1, self.nvars)
        self.size = len(self.exps)
        self.deg = self.exps.sum(axis=1)
        self.xdeg = self.exps[:, :nx].sum(axis=1)
        self._radix = degree + 1
        self._weights = self._radix ** np.arange(self.nvars, dtype=np.int64)
        keys = self.exps @ self._weights
        self._order = np.argsort(keys)
        self._sorted_keys = keys[self._order]
        self._product = None
        self._derivs = {}
        self._restrict = {}

    def __repr__(self):
        return f"JetBasis(nx={self.nx}, ny={self.ny}, degree={self.degree}, xdegree={self.xdegree})"

    def lookup(self, exps: np.ndarray) -> np.ndarray:
        keys = np.asarray(exps, dtype=np.int64) @ self._weights
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, self.size - 1)
        if not np.all(self._sorted_keys[pos] == keys):
            raise KeyError("monomial outside jet basis")
        return self._order[pos]

    @property
    def product(self):
        """(left index, right index, scatter matrix P x M) for all valid pairs."""
        if self._product is None:
            classes = {}
            for i, (d, xd) in enumerate(zip(self.deg, self.xdeg)):
                classes.setdefault((int(d), int(xd)), []).append(i)
            classes = {k: np.array(v) for k, v in classes.items()}
            left, right = [], []
            for (d1, x1), i1 in classes.items():
                for (d2, x2), i2 in classes.items():
                    if d1 + d2 <= self.degree and x1 + x2 <= self.xdegree:
                        a, b = np.meshgrid(i1, i2, indexing="ij")
                        left.append(a.ravel())
                        right.append(b.ravel())
            left = np.concatenate(left)
            right = np.concatenate(right)
            out = self.lookup(self.exps[left] + self.exps[right])
            npairs = len(left)
            scatter = sp.csc_matrix(
                (np.ones(npairs), (out, np.arange(npairs))), shape=(self.size, npairs)
            )
            self._product = (left, right, scatter)
        return self._product

    def active_product(self, a_coef: np.ndarray, b_coef: np.ndarray):
        """Product table restricted to pairs whose coefficients are not identically zero."""
        left, right, scatter = self.product
        a_live = np.any(a_coef.reshape(-1, self.size) != 0, axis=0)
        b_live = np.any(b_coef.reshape(-1, self.size) != 0, axis=0)
        keep = a_live[left] & b_live[right]
        if keep.mean() > 0.5:
            return left, right, scatter
        sel = np.flatnonzero(keep)
        return left[sel], right[sel], scatter[:, sel]

    def derivative_table(self, var: int):
        """Target basis, source indices and factors for d/d(var)."""
        if var not in self._derivs:
            is_x = var < self.nx
            if self.degree == 0 or (is_x and self.xdegree == 0):
                raise ValueError(f"{self!r} carries no derivative in variable {var}")
            target = get_basis(self.nx, self.ny, self.degree - 1, self.xdegree - int(is_x))
            shifted = target.exps.copy()
            shifted[:, var] += 1
            src = self.lookup(shifted)
            self._derivs[var] = (target, src, shifted[:, var].astype(float))
        return self._derivs[var]

    def restriction(self, target: "JetBasis") -> np.ndarray:
        if target not in self._restrict:
            self._restrict[target] = self.lookup(target.exps)
        return self._restrict[target]


def _compositions(nvars: int, total: int):
    if nvars == 0:
        if total == 0:
            yield ()
        return
    if nvars == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(nvars - 1, total - first):
            yield (first,) + rest


@functools.lru_cache(maxsize=None)
def get_basis(nx: int, ny: int, degree: int, xdegree: int | None = None) -> JetBasis:
    if xdegree is None:
        xdegree = degree
    return JetBasis(nx, ny, degree, min(xdegree, degree))


def _meet(a: JetBasis, b: JetBasis) -> JetBasis:
    if a is b:
        return a
    if (a.nx, a.ny) != (b.nx, b.ny):
        raise ValueError("jets over different variable sets")
    return get_basis(a.nx, a.ny, min(a.degree, b.degree), min(a.xdegree, b.xdegree))


class Jet:
    """Array of truncated Taylor polynomials; the last axis of ``coef`` indexes monomials."""

    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, basis: JetBasis, coef: np.ndarray):
        self.basis = basis
        self.coef = coef

    # construction ------------------------------------------------------------
    @classmethod
    def constant(cls, basis: JetBasis, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        coef = np.zeros(value.shape + (basis.size,))
        coef[..., 0] = value
        return cls(basis, coef)

    @classmethod
    def seed(cls, basis: JetBasis, value, first_var: int) -> "Jet":
        """Vector ``value + (v_first, v_first+1, ...)`` of independent variables."""
        value = np.asarray(value, dtype=float)
        jet = cls.constant(basis, value)
        for i in range(value.shape[0]):
            e = np.zeros(basis.nvars, dtype=np.int64)
            e[first_var + i] = 1
            jet.coef[i, basis.lookup(e[None])[0]] = 1.0
        return jet

    # array protocol ----------------------------------------------------------
    @property
    def shape(self):
        return self.coef.shape[:-1]

    @property
    def ndim(self):
        return self.coef.ndim - 1

    def __len__(self):
        return self.shape[0]

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0].copy()

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.basis, self.coef[key + (slice(None),)])

    @property
    def T(self) -> "Jet":
        axes = tuple(reversed(range(self.ndim))) + (self.ndim,)
        return Jet(self.basis, self.coef.transpose(axes))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = axis % self.ndim
        return Jet(self.basis, self.coef.sum(axis=axis))

    def diagonal(self) -> "Jet":
        return Jet(self.basis, np.moveaxis(np.diagonal(self.coef, axis1=0, axis2=1), -1, 0))

    def restrict(self, basis: JetBasis) -> "Jet":
        if basis is self.basis:
            return self
        return Jet(basis, self.coef[..., self.basis.restriction(basis)])

    def coefficient(self, exps) -> np.ndarray:
        return self.coef[..., self.basis.lookup(np.atleast_2d(exps))[0]]

    # arithmetic --------------------------------------------------------------
    def _pair(self, other):
        basis = _meet(self.basis, other.basis)
        return self.restrict(basis), other.restrict(basis), basis

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, basis = self._pair(other)
            return Jet(basis, a.coef + b.coef)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        coef = np.broadcast_to(self.coef, shape + (self.basis.size,)).copy()
        coef[..., 0] += other
        return Jet(self.basis, coef)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.basis, -self.coef)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, basis = self._pair(other)
            left, right, scatter = basis.active_product(a.coef, b.coef)
            prod = a.coef[..., left] * b.coef[..., right]
            return Jet(basis, _scatter(prod, scatter))
        other = np.asarray(other, dtype=float)
        return Jet(self.basis, self.coef * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        return Jet(self.basis, self.coef / other[..., None])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, power):
        if power == 2:
            return self * self
        if power == 0.5:
            return self.sqrt()
        raise NotImplementedError("jets support only squares and square roots")

    def __matmul__(self, other):
        if isinstance(other, Jet):
            return _matmul_jets(self, other)
        other = np.asarray(other, dtype=float)
        coef = np.tensordot(self.coef, other, axes=([self.ndim - 1], [0]))
        # tensordot leaves the monomial axis before the constant's free axes
        coef = np.moveaxis(coef, self.ndim - 1, -1)
        return Jet(self.basis, coef)

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        axis = 0 if self.ndim == 1 else self.ndim - 2
        coef = np.tensordot(other, self.coef, axes=([other.ndim - 1], [axis]))
        return Jet(self.basis, coef)

    # elementwise analytic functions -----------------------------------------
    def _series(self, coeffs_of):
        """sum_k a_k(c0) u^k with u = self - c0; coeffs_of(c0, k) -> array."""
        c0 = self.value
        u = self - c0
        u = Jet(self.basis, u.coef.copy())
        u.coef[..., 0] = 0.0
        result = Jet.constant(self.basis, coeffs_of(c0, self.basis.degree))
        for k in range(self.basis.degree - 1, -1, -1):
            result = result * u + coeffs_of(c0, k)
        return result

    def sqrt(self) -> "Jet":
        if np.any(self.value <= 0):
            raise ValueError("square root of a jet with nonpositive constant term")

        def coeff(c0, k):
            return _binom_half(k) * c0 ** (0.5 - k)

        return self._series(coeff)

    def reciprocal(self) -> "Jet":
        if np.any(self.value == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")

        def coeff(c0, k):
            return (-1.0) ** k * c0 ** (-1.0 - k)

        return self._series(coeff)

    # calculus ----------------------------------------------------------------
    def diff(self, var: int) -> "Jet":
        target, src, factor = self.basis.derivative_table(var)
        return Jet(target, self.coef[..., src] * factor)

    def gradient(self, variables) -> "Jet":
        """Stack d/d(var) along a new trailing array axis."""
        parts = [self.diff(v) for v in variables]
        return Jet(parts[0].basis, np.stack([p.coef for p in parts], axis=-2))


def _binom_half(k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= (0.5 - j) / (j + 1)
    return out


def _scatter(prod: np.ndarray, scatter) -> np.ndarray:
    lead = prod.shape[:-1]
    flat = prod.reshape(int(np.prod(lead, dtype=np.int64)), prod.shape[-1])
    out = scatter @ flat.T
    return np.asarray(out).T.reshape(lead + (scatter.shape[0],))


def _matmul_jets(a: Jet, b: Jet) -> Jet:
    a, b, basis = a._pair(b)
    left, right, scatter = basis.active_product(a.coef, b.coef)
    A = a.coef[..., left]
    B = b.coef[..., right]
    if a.ndim == 2 and b.ndim == 2:
        prod = np.einsum("ikp,kjp->ijp", A, B)
    elif a.ndim == 2 and b.ndim == 1:
        prod = np.einsum("ikp,kp->ip", A, B)
    elif a.ndim == 1 and b.ndim == 2:
        prod = np.einsum("kp,kjp->jp", A, B)
    elif a.ndim == 1 and b.ndim == 1:
        prod = np.einsum("kp,kp->p", A, B)
    else:
        raise ValueError("jet matmul supports 1-d and 2-d operands only")
    return Jet(basis, _scatter(prod, scatter))


# dispatching helpers shared by numeric and jet code paths ---------------------

def is_jet(v) -> bool:
    return isinstance(v, Jet)


def value(v) -> np.ndarray:
    return v.value if isinstance(v, Jet) else np.asarray(v, dtype=float)


def sqrt(v):
    return v.sqrt() if isinstance(v, Jet) else np.sqrt(v)


def trace(m):
    return m.diagonal().sum() if isinstance(m, Jet) else np.trace(m)


def inv(m):
    """Matrix inverse; for jets the Neumann series around the constant term."""
    if not isinstance(m, Jet):
        return np.linalg.inv(m)
    m0_inv = np.linalg.inv(m.value)
    step = -(m0_inv @ (m - m.value))
    out = Jet.constant(m.basis, m0_inv)
    for _ in range(m.basis.degree):
        out = step @ out + m0_inv
    return out


def solve(m, v):
    if not isinstance(m, Jet) and not isinstance(v, Jet):
        return np.linalg.solve(m, v)
    return inv(m) @ v


def stack(items, axis=0):
    if any(isinstance(i, Jet) for i in items):
        ref = next(i for i in items if isinstance(i, Jet))
        jets = [i if isinstance(i, Jet) else Jet.constant(ref.basis, i) for i in items]
        basis = jets[0].basis
        for j in jets[1:]:
            basis = _meet(basis, j.basis)
        coefs = [j.restrict(basis).coef for j in jets]
        ax = axis if axis >= 0 else axis - 1
        return Jet(basis, np.stack(coefs, axis=ax))
    return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)


def factorial_weight(exps) -> float:
    return float(np.prod([math.factorial(int(e)) for e in exps]))
