"""Real nilpotent Lie algebras given by structure constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

MAX_DIM = 8
MAX_CLASS = 4


class AlgebraError(ValueError):
    """Raised for structure constants that do not define a usable algebra."""


@dataclass(frozen=True, eq=False)
class NilpotentAlgebra:
    """Structure constants ``c[i, j, k]`` with ``[e_i, e_j] = sum_k c[i, j, k] e_k``.

    Indices are 0-based here; model files use 1-based indices.
    """

    c: np.ndarray
    class_bound: int = MAX_CLASS
    labels: tuple = field(default=())

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise AlgebraError(f"structure constants must be n x n x n, got {c.shape}")
        if not 1 <= c.shape[0] <= MAX_DIM:
            raise AlgebraError(f"dimension must lie in 1..{MAX_DIM}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def ad_basis(self) -> np.ndarray:
        """ad_{e_i} as matrices: ``ad_basis[i][k, j] = c[i, j, k]``."""
        return np.transpose(self.c, (0, 2, 1))

    def ad(self, x):
        """Matrix of ad_x; generic over jets."""
        mats = self.ad_basis
        out = x[0] * mats[0]
        for i in range(1, self.dim):
            out = out + x[i] * mats[i]
        return out

    @classmethod
    def from_brackets(cls, dim: int, brackets: dict, class_bound: int = MAX_CLASS, labels=()):
        """Build from ``{(i, j): {k: coeff}}`` with 0-based indices; antisymmetry is implied."""
        c = np.zeros((dim, dim, dim))
        for (i, j), coeffs in brackets.items():
            for k, val in coeffs.items():
                c[i, j, k] += val
                c[j, i, k] -= val
        return cls(c, class_bound=class_bound, labels=tuple(labels))


def bracket(alg: NilpotentAlgebra, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (alg.dim,) or v.shape != (alg.dim,):
        raise AlgebraError(f"bracket expects vectors of length {alg.dim}")
    # explicit antisymmetrization makes bracket(u, v) == -bracket(v, u) bitwise
    uv = np.einsum("i,j,ijk->k", u, v, alg.c)
    vu = np.einsum("i,j,ijk->k", v, u, alg.c)
    return 0.5 * (uv - vu)


def bracket_generic(alg: NilpotentAlgebra, u, v):
    """Bracket that also accepts jets (ad_u applied to v)."""
    return alg.ad(u) @ v


def jacobiator(alg: NilpotentAlgebra) -> np.ndarray:
    """J[i, j, k, :] = [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]]."""
    c = alg.c
    # [e_i, [e_j, e_k]] = c[j,k,l] c[i,l,m]
    t = np.einsum("jkl,ilm->ijkm", c, c)
    return t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))


@dataclass
class ValidationReport:
    antisymmetry: bool
    antisymmetry_residual: float
    jacobi: bool
    jacobi_residual: float
    jacobi_witness: tuple | None
    nilpotent: bool
    nilpotency_class: int | None
    within_class_bound: bool
    series_dims: list

    @property
    def ok(self) -> bool:
        return self.antisymmetry and self.jacobi and self.nilpotent and self.within_class_bound


def _span_rank(vectors: np.ndarray, tol: float = 1e-10) -> tuple[int, np.ndarray]:
    """Rank and orthonormal basis (columns) of the span of the rows of ``vectors``."""
    if vectors.size == 0:
        return 0, np.zeros((vectors.shape[-1], 0))
    u, s, _ = scipy.linalg.svd(vectors.T, full_matrices=False)
    if s.size == 0 or s[0] <= tol:
        return 0, np.zeros((vectors.shape[-1], 0))
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return r, u[:, :r]


def lower_central_series(alg: NilpotentAlgebra, max_steps: int | None = None) -> list[int]:
    """Dimensions of n_0 = n, n_k = [n, n_{k-1}] until zero or stabilization."""
    n = alg.dim
    max_steps = max_steps or n + 1
    basis = np.eye(n)
    dims = [n]
    for _ in range(max_steps):
        # brackets of e_i with each basis column of the current term
        images = np.einsum("ijk,jm->imk", alg.c, basis).reshape(-1, n)
        r, basis = _span_rank(images)
        dims.append(r)
        if r == 0 or r == dims[-2]:
            break
    return dims


def validate(alg: NilpotentAlgebra, tol: float = 1e-12) -> ValidationReport:
    c = alg.c
    anti = float(np.max(np.abs(c + np.transpose(c, (1, 0, 2))), initial=0.0))
    jac = jacobiator(alg)
    jac_res = float(np.max(np.abs(jac), initial=0.0))
    witness = None
    if jac_res > tol:
        i, j, k, _ = np.unravel_index(np.argmax(np.abs(jac)), jac.shape)
        witness = (int(i) + 1, int(j) + 1, int(k) + 1)
    dims = lower_central_series(alg)
    nilpotent = dims[-1] == 0
    cls = len(dims) - 1 if nilpotent else None
    return ValidationReport(
        antisymmetry=anti <= tol,
        antisymmetry_residual=anti,
        jacobi=jac_res <= tol,
        jacobi_residual=jac_res,
        jacobi_witness=witness,
        nilpotent=nilpotent,
        nilpotency_class=cls,
        within_class_bound=nilpotent and cls <= alg.class_bound,
        series_dims=dims,
    )


@dataclass(frozen=True, eq=False)
class DerivationBasis:
    generators: np.ndarray  # (dim_der, n, n), Frobenius-orthonormal
    singular_values: np.ndarray

    @property
    def dim_der(self) -> int:
        return self.generators.shape[0]

    def combine(self, coeffs) -> np.ndarray:
        return np.einsum("m,mij->ij", np.asarray(coeffs, dtype=float), self.generators)

    def project(self, D) -> np.ndarray:
        """Frobenius coordinates of the orthogonal projection of D onto Der."""
        return np.einsum("mij,ij->m", self.generators, np.asarray(D, dtype=float))


def leibniz_operator(alg: NilpotentAlgebra) -> np.ndarray:
    """Matrix L with L @ vec(D) = (D[e_i,e_j] - [De_i,e_j] - [e_i,De_j])_{i,j,k}.

    D acts on column vectors, vec is row-major: vec(D)[a*n + b] = D[a, b].
    """
    n = alg.dim
    c = alg.c
    eye = np.eye(n)
    # D[e_i,e_j]_k = sum_l c[i,j,l] D[k,l]
    t1 = np.einsum("ijl,ka->ijkal", c, eye)
    # [De_i, e_j]_k = sum_l D[l,i] c[l,j,k]
    t2 = np.einsum("ljk,ib->ijklb", c, eye)
    # [e_i, De_j]_k = sum_l D[l,j] c[i,l,k]
    t3 = np.einsum("ilk,jb->ijklb", c, eye)
    L = t1 - t2 - t3
    return L.reshape(n**3, n * n)


def leibniz_residual(alg: NilpotentAlgebra, D) -> float:
    return float(np.max(np.abs(leibniz_operator(alg) @ np.asarray(D, dtype=float).ravel()), initial=0.0))


def derivation_basis(alg: NilpotentAlgebra, rcond: float = 1e-9, gap: float = 1e-6) -> DerivationBasis:
    """Orthonormal basis of Der(n) as the numerical null space of the Leibniz system.

    Singular values below ``rcond * s_max`` count as zero; any in the band
    ``(rcond, gap] * s_max`` make the rank ambiguous and raise.
    """
    n = alg.dim
    L = leibniz_operator(alg)
    _, s, vt = scipy.linalg.svd(L, full_matrices=True)
    s_full = np.zeros(n * n)
    s_full[: s.size] = s
    smax = s_full.max(initial=0.0)
    if smax == 0.0:
        gens = np.eye(n * n).reshape(n * n, n, n)
        return DerivationBasis(gens, s_full)
    ambiguous = (s_full > rcond * smax) & (s_full <= gap * smax)
    if np.any(ambiguous):
        raise AlgebraError(
            f"derivation constraint system is ill-conditioned: singular values {s_full[ambiguous]}"
        )
    null = vt[s_full <= rcond * smax]
    return DerivationBasis(null.reshape(-1, n, n), s_full)


# catalog ----------------------------------------------------------------------

def abelian(n: int = 3) -> NilpotentAlgebra:
    return NilpotentAlgebra(np.zeros((n, n, n)), class_bound=1)


def heisenberg(k: int = 1) -> NilpotentAlgebra:
    """H_{2k+1}: [e_{2i-1}, e_{2i}] = e_{2k+1}."""
    n = 2 * k + 1
    return NilpotentAlgebra.from_brackets(
        n, {(2 * i, 2 * i + 1): {n - 1: 1.0} for i in range(k)}, class_bound=2
    )


def filiform4() -> NilpotentAlgebra:
    """[e1, e2] = e3, [e1, e3] = e4."""
    return NilpotentAlgebra.from_brackets(4, {(0, 1): {2: 1.0}, (0, 2): {3: 1.0}}, class_bound=3)
