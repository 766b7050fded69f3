import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randers_soliton import curvature as cv
from randers_soliton import fdiff, riemann, soliton
from randers_soliton import randers as rd
from randers_soliton.randers import TangentSample

from conftest import ALGEBRAS, random_admissible, random_spd, structure


def basis_fields(n):
    yield np.zeros(n)
    for i in range(n):
        for sign in (1, -1):
            v = np.zeros(n)
            v[i] = 0.2 * sign
            yield v


# structural criteria -------------------------------------------------------------

def test_douglas_examples():
    assert soliton.douglas_check(structure("h3")).holds
    v = soliton.douglas_check(structure("h3", [0, 0, 0.2]))
    assert not v.holds
    assert v.witness[:2] == (1, 2) and v.witness[2] == pytest.approx(0.2)
    assert soliton.douglas_check(structure("h3", [0.5, 0, 0])).holds


def test_berwald_examples():
    assert soliton.berwald_check(structure("h3")).holds
    v = soliton.berwald_check(structure("h3", [0, 0, 0.2]))
    assert not v.holds
    cov = riemann.covariant_derivative_of(ALGEBRAS["h3"], np.eye(3), [0, 0, 0.2])
    np.testing.assert_allclose(cov[:, 0], [0, -0.1, 0], atol=1e-15)
    assert soliton.berwald_check(structure("abelian", [0.3, 0.1, -0.5])).holds


def test_killing_flow_examples():
    s = structure("h3")
    assert soliton.killing_flow_check(s, [0, 0, 0.3]).holds
    assert not soliton.killing_flow_check(s, [1, 0, 0]).holds
    assert soliton.killing_flow_check(structure("abelian"), [0.4, -1, 2]).holds


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_killing_criteria_agree_on_basis_fields(name):
    s = structure(name)
    for X in basis_fields(s.dim):
        assert soliton.killing_check(s, X).holds == soliton.killing_flow_check(s, X).holds


def test_lie_derivative_of_metric_matches_ad_formula(rng):
    # (L_X a)(Y, Z) = -a([X,Y], Z) - a(Y, [X,Z]) on left-invariant Y, Z
    alg = ALGEBRAS["f4"]
    A = random_spd(rng, 4)
    X = rng.normal(size=4)
    L = soliton.lie_derivative_of_metric(alg, A, X, np.zeros(4))
    adX = alg.ad(X)
    np.testing.assert_allclose(L, -(adX.T @ A + A @ adX), atol=1e-12)


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_berwald_implies_douglas(name, rng):
    for _ in range(5):
        A = random_spd(rng, ALGEBRAS[name].dim)
        s = structure(name, random_admissible(rng, A), A)
        if soliton.berwald_check(s).holds:
            assert soliton.douglas_check(s).holds
    for X in basis_fields(ALGEBRAS[name].dim):
        s = structure(name, X)
        if soliton.berwald_check(s).holds:
            assert soliton.douglas_check(s).holds


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_killing_berwald_matches_ricci_quadratic(name, rng):
    n = ALGEBRAS[name].dim
    directions = rng.normal(size=(n * (n + 1) // 2 + 10, n))
    for X in basis_fields(n):
        s = structure(name, X)
        if not soliton.killing_check(s).holds:
            continue
        quad = cv.ricci_quadratic_check(s, np.zeros(n), directions).quadratic
        assert quad == soliton.berwald_check(s).holds


# Lie derivative along complete lifts -----------------------------------------------

def test_linear_field_on_flat_space_gives_twice_g():
    s = structure("abelian")
    smp = TangentSample([0.3, -0.1, 0.2], [1.0, 0.5, -0.7])
    L = soliton.lie_derivative_fundamental(s, soliton.LinearField(np.eye(3)), smp)
    np.testing.assert_allclose(L, 2 * np.eye(3), atol=1e-14)


def test_zero_field_gives_zero():
    s = structure("h3", [0, 0, 0.2])
    smp = TangentSample([0.3, -0.1, 0.2], [1.0, 0.5, -0.7])
    L = soliton.lie_derivative_fundamental(s, soliton.LinearField(np.zeros((3, 3))), smp)
    np.testing.assert_allclose(L, 0, atol=1e-15)


def _lie_fd(s, V, DV, smp, h=1e-4):
    """d/dt g(x + tV, y + t DV y) contracted with (I + t DV): finite-difference oracle."""

    def pulled(t):
        J = np.eye(s.dim) + t * DV
        return J.T @ rd.fundamental_tensor(s, smp.x + t * V, J @ smp.y) @ J

    return fdiff.derivative(pulled, np.zeros(1), np.ones(1), h)


def test_lie_derivative_against_finite_difference(rng):
    for name in ("h3", "f4", "h5"):
        n = ALGEBRAS[name].dim
        A = random_spd(rng, n)
        s = structure(name, random_admissible(rng, A), A)
        B = rng.normal(size=(n, n))
        smp = TangentSample(rng.normal(scale=0.5, size=n), rng.normal(size=n))
        L = soliton.lie_derivative_fundamental(s, soliton.LinearField(B), smp)
        np.testing.assert_allclose(L, _lie_fd(s, B @ smp.x, B, smp), atol=1e-8)


def test_polynomial_field_against_finite_difference(rng):
    s = structure("h3", [0.1, 0, 0.3])
    # V = (x2^2, x1 x3, 1)
    V = soliton.PolynomialField(3, [(0, 1.0, (0, 2, 0)), (1, 1.0, (1, 0, 1)), (2, 1.0, (0, 0, 0))])
    smp = TangentSample([0.2, -0.4, 0.7], [0.3, 1.0, -0.5])
    x = smp.x
    Vx = np.array([x[1] ** 2, x[0] * x[2], 1.0])
    DV = np.array([[0, 2 * x[1], 0], [x[2], 0, x[0]], [0, 0, 0]])
    L = soliton.lie_derivative_fundamental(s, V, smp)
    np.testing.assert_allclose(L, _lie_fd(s, Vx, DV, smp), atol=1e-8)


def test_left_invariant_field_is_killing_for_its_lift():
    # right translation along the center of H3 is an isometry, so the complete lift preserves g
    s = structure("h3", [0, 0, 0.2])
    V = soliton.LeftInvariantField(s.alg, [0, 0, 1.0])
    smp = TangentSample([0.3, -0.2, 0.5], [1.0, 0.4, -0.3])
    np.testing.assert_allclose(soliton.lie_derivative_fundamental(s, V, smp), 0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_lie_derivative_linear_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    s = structure("h3", [0, 0.1, 0.3])
    B = rng.normal(size=(3, 3))
    smp = TangentSample(rng.normal(scale=0.5, size=3), rng.normal(size=3))
    L1 = soliton.lie_derivative_fundamental(s, soliton.LinearField(B), smp)
    L2 = soliton.lie_derivative_fundamental(s, soliton.LinearField(2 * B), smp)
    np.testing.assert_allclose(L2, 2 * L1, atol=1e-10)
    np.testing.assert_allclose(L1, L1.T, atol=1e-12)


# soliton residual -------------------------------------------------------------

def test_gaussian_soliton_residual():
    s = structure("abelian")
    rng = np.random.default_rng(3)
    smps = [TangentSample(rng.normal(size=3), rng.normal(size=3)) for _ in range(10)]
    assert soliton.soliton_residual(s, soliton.LinearField(np.eye(3)), -2.0, smps) <= 1e-8


def test_flat_zero_residual_and_heisenberg_positive():
    zero = soliton.LinearField(np.zeros((3, 3)))
    smp = [TangentSample(np.zeros(3), [0, 0, 1.0])]
    assert soliton.soliton_residual(structure("abelian"), zero, 0.0, smp) == 0.0
    res = soliton.soliton_residual(structure("h3"), zero, 0.0, smp)
    assert res == pytest.approx(np.linalg.norm(np.diag([-0.5, -0.5, 0.5])), abs=1e-12)


# semialgebraic fit ------------------------------------------------------------

def test_sphere_directions_on_unit_sphere(rng):
    A = random_spd(rng, 4)
    d = soliton.sphere_directions(A, 16, seed=5)
    np.testing.assert_allclose(np.einsum("ki,ij,kj->k", d, A, d), 1.0, atol=1e-12)
    np.testing.assert_array_equal(d, soliton.sphere_directions(A, 16, seed=5))
    assert not np.array_equal(d, soliton.sphere_directions(A, 16, seed=6))


def test_heisenberg_nilsoliton_fit():
    s = structure("h3")
    fit = soliton.semialgebraic_fit(s, soliton.sphere_directions(s.A, 16))
    assert fit.c == pytest.approx(-1.5, abs=1e-6)
    np.testing.assert_allclose(fit.symmetric_part(), np.diag([1.0, 1.0, 2.0]), atol=1e-6)
    assert fit.residual <= 1e-8
    assert fit.classification == "expanding"
    assert fit.leibniz_residual <= 1e-8


def test_abelian_fit_is_zero():
    s = structure("abelian")
    fit = soliton.semialgebraic_fit(s, soliton.sphere_directions(s.A, 8))
    assert fit.c == 0.0 and np.all(fit.D == 0) and fit.residual == 0.0
    assert fit.classification == "steady"


def test_classification_threshold():
    assert soliton.classify(2e-8) == "shrinking"
    assert soliton.classify(-2e-8) == "expanding"
    assert soliton.classify(5e-9) == "steady"


def test_fit_needs_two_directions():
    with pytest.raises(ValueError):
        soliton.semialgebraic_fit(structure("h3"), np.array([[1.0, 0, 0]]))


def test_riemannian_fit_reduces_to_lauret(rng):
    for name in ("h3", "h5", "f4"):
        A = random_spd(rng, ALGEBRAS[name].dim)
        s = structure(name, A=A)
        fit = soliton.semialgebraic_fit(s, soliton.sphere_directions(A, 8))
        lf = soliton.lauret_fit(s.alg, A)
        assert fit.c == pytest.approx(lf.c, abs=1e-9)
        assert fit.residual == pytest.approx(lf.residual, abs=1e-9)


def test_h5_soliton_requires_balanced_metric():
    assert soliton.lauret_fit(ALGEBRAS["h5"], np.eye(5)).residual <= 1e-12
    assert soliton.lauret_fit(ALGEBRAS["h5"], np.diag([1.5, 1, 1, 1, 1])).residual > 0.1


def test_randers_fit_permutation_invariant_and_deterministic():
    s = structure("h3", [0, 0, 0.2])
    d = soliton.sphere_directions(s.A, 12, seed=1)
    a = soliton.semialgebraic_fit(s, d)
    b = soliton.semialgebraic_fit(s, d[::-1])
    c = soliton.semialgebraic_fit(s, d)
    assert a.residual == pytest.approx(b.residual, abs=1e-12)
    assert a.c == pytest.approx(b.c, abs=1e-12)
    assert a.residual == c.residual and a.c == c.c
    assert a.leibniz_residual <= 1e-8


def test_per_sample_fits_are_exact_for_riemannian():
    s = structure("h3")
    for fit in soliton.per_sample_fits(s, soliton.sphere_directions(s.A, 4)):
        assert fit.residual <= 1e-10
