import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from randers_soliton import jet as jt

finite = st.floats(-2, 2, allow_nan=False)


def taylor_coeffs(expr, syms, point, basis):
    """Taylor coefficients of ``expr`` at ``point`` in the basis ordering, via sympy."""
    subs = dict(zip(syms, point))
    out = np.zeros(basis.size)
    for m, exps in enumerate(basis.exps):
        d = expr
        for s, e in zip(syms, exps):
            if e:
                d = sp.diff(d, s, int(e))
        out[m] = float(d.subs(subs)) / jt.factorial_weight(exps)
    return out


def test_polynomial_product_matches_sympy():
    x, y = sp.symbols("x y")
    basis = jt.get_basis(1, 1, 4)
    X = jt.Jet.seed(basis, [0.3], 0)[0]
    Y = jt.Jet.seed(basis, [-0.7], 1)[0]
    got = (X * X * Y + 3 * Y * Y - X).coef
    want = taylor_coeffs(x * x * y + 3 * y * y - x, (x, y), (0.3, -0.7), basis)
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_sqrt_and_reciprocal_match_sympy():
    x, y = sp.symbols("x y")
    basis = jt.get_basis(1, 1, 5)
    X = jt.Jet.seed(basis, [0.4], 0)[0]
    Y = jt.Jet.seed(basis, [1.3], 1)[0]
    q = 1 + X * X + 2 * Y * Y
    np.testing.assert_allclose(q.sqrt().coef, taylor_coeffs(sp.sqrt(1 + x**2 + 2 * y**2), (x, y), (0.4, 1.3), basis), atol=1e-12)
    np.testing.assert_allclose((1.0 / q).coef, taylor_coeffs(1 / (1 + x**2 + 2 * y**2), (x, y), (0.4, 1.3), basis), atol=1e-12)


def test_xdegree_truncation_drops_high_x_powers():
    basis = jt.get_basis(1, 1, 4, 1)
    assert all(e[0] <= 1 for e in basis.exps)
    X = jt.Jet.seed(basis, [0.0], 0)[0]
    assert np.all((X * X).coef == 0)


def test_diff_lowers_degree_and_matches_sympy():
    x, y = sp.symbols("x y")
    basis = jt.get_basis(1, 1, 4)
    X = jt.Jet.seed(basis, [0.2], 0)[0]
    Y = jt.Jet.seed(basis, [0.5], 1)[0]
    f = X * X * X * Y + Y * Y * X
    d = f.diff(1)
    want = taylor_coeffs(sp.diff(x**3 * y + y * y * x, y), (x, y), (0.2, 0.5), d.basis)
    np.testing.assert_allclose(d.coef, want, atol=1e-13)
    assert d.basis.degree == 3


def test_inverse_of_matrix_jet():
    basis = jt.get_basis(2, 0, 3)
    v = jt.Jet.seed(basis, [0.1, -0.2], 0)
    M = jt.stack([jt.stack([2 + v[0], v[1]]), jt.stack([v[0] * v[1], 1 - v[1]])])
    Minv = jt.inv(M)
    prod = M @ Minv
    np.testing.assert_allclose(prod.coef[..., 0], np.eye(2), atol=1e-14)
    np.testing.assert_allclose(prod.coef[..., 1:], 0, atol=1e-13)


def test_empty_product_table_is_handled():
    basis = jt.get_basis(2, 0, 2)
    z = jt.Jet.constant(basis, np.zeros((2, 2)))
    assert np.all((z @ z).coef == 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6))
def test_ring_axioms(vals):
    basis = jt.get_basis(1, 1, 3)
    X = jt.Jet.seed(basis, [vals[0]], 0)[0]
    Y = jt.Jet.seed(basis, [vals[1]], 1)[0]
    a = X * vals[2] + Y
    b = Y * Y + vals[3]
    c = X * Y - vals[4]
    np.testing.assert_allclose(((a * b) * c).coef, (a * (b * c)).coef, atol=1e-10)
    np.testing.assert_allclose((a * (b + c)).coef, (a * b + a * c).coef, atol=1e-10)
    np.testing.assert_allclose((a * b).coef, (b * a).coef, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-1, 1))
def test_sqrt_squares_back(c0, c1):
    basis = jt.get_basis(1, 0, 5)
    X = jt.Jet.seed(basis, [c1], 0)[0]
    q = X * X + c0
    r = q.sqrt()
    np.testing.assert_allclose((r * r).coef, q.coef, atol=1e-10 * max(1, c0))


def test_factorial_weight():
    assert jt.factorial_weight([2, 3]) == math.factorial(2) * math.factorial(3)


def test_seed_needs_room_for_variables():
    basis = jt.get_basis(1, 0, 2)
    with pytest.raises(Exception):
        jt.Jet.seed(basis, [0.0, 1.0], 0)
