import json

import numpy as np
import pytest

from randers_soliton import flow, riemann, soliton
from randers_soliton.riemann import MetricError

from conftest import ALGEBRAS, random_spd, structure

H3 = ALGEBRAS["h3"]


def h3_exact(t):
    """Unnormalized flow from A = I on H3: diag(u, u, 1/u) with u = (1 + 3t)^(1/3)."""
    u = (1 + 3 * t) ** (1 / 3)
    return np.diag([u, u, 1 / u])


def test_rhs_examples():
    np.testing.assert_allclose(flow.flow_rhs(H3, np.eye(3)), np.diag([1.0, 1.0, -1.0]), atol=1e-14)
    np.testing.assert_allclose(
        flow.flow_rhs(H3, np.eye(3), "normalized"), np.diag([2 / 3, 2 / 3, -4 / 3]), atol=1e-14
    )
    for kind in flow.KINDS:
        assert np.all(flow.flow_rhs(ALGEBRAS["abelian"], np.eye(3), kind) == 0)


def test_rhs_rejects_bad_input():
    with pytest.raises(MetricError):
        flow.flow_rhs(H3, -np.eye(3))
    with pytest.raises(ValueError):
        flow.flow_rhs(H3, np.eye(3), "sideways")


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_normalized_is_unnormalized_plus_rescaling(name, rng):
    alg = ALGEBRAS[name]
    A = random_spd(rng, alg.dim)
    sc = flow.scalar_curvature(alg, A)
    np.testing.assert_allclose(
        flow.flow_rhs(alg, A, "normalized"), flow.flow_rhs(alg, A) + (2 / alg.dim) * sc * A, atol=1e-13
    )
    assert sc == pytest.approx(riemann.scalar_curvature(alg, A), abs=1e-13)


def test_abelian_is_stationary():
    A0 = np.diag([1.0, 2.0, 3.0])
    traj = flow.integrate(ALGEBRAS["abelian"], A0, "unnormalized", 1.0)
    assert np.all(traj.metrics == A0)
    dev, _ = flow.self_similarity_check(ALGEBRAS["abelian"], A0)
    assert dev == 0.0


def test_h3_matches_closed_form():
    traj = flow.integrate(H3, np.eye(3), "unnormalized", 1.0)
    np.testing.assert_allclose(traj.final, h3_exact(1.0), atol=1e-8)
    assert not traj.blow_up


def test_initial_derivative_of_a33():
    # one tiny exact-RK4 step recovers the slope
    h = 1e-6
    traj = flow.integrate(H3, np.eye(3), "unnormalized", h, fixed_step=h)
    assert (traj.final[2, 2] - 1) / h == pytest.approx(-1.0, abs=1e-5)
    assert flow.flow_rhs(H3, np.eye(3))[2, 2] == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("name", sorted(ALGEBRAS))
def test_normalized_flow_preserves_volume_and_spd(name, rng):
    alg = ALGEBRAS[name]
    A0 = random_spd(rng, alg.dim)
    traj = flow.integrate(alg, A0, "normalized", 1.0)
    assert traj.det_drift() <= 1e-6
    assert np.all(traj.min_eigenvalues > 0)


def test_fixed_step_fourth_order():
    errs = []
    for h in (0.1, 0.05, 0.025):
        traj = flow.integrate(H3, np.eye(3), "unnormalized", 1.0, fixed_step=h)
        errs.append(np.max(np.abs(traj.final - h3_exact(1.0))))
    assert errs[0] / errs[1] >= 12 and errs[1] / errs[2] >= 12


def test_grid_times_recorded_exactly():
    grid = [0.1, 0.25, 0.4]
    traj = flow.integrate(H3, np.eye(3), "unnormalized", 0.5, t_grid=grid)
    for t in grid:
        np.testing.assert_allclose(traj.at(t), h3_exact(t), atol=1e-8)
    with pytest.raises(KeyError):
        traj.at(0.3)


def test_blow_up_is_flagged():
    # an oversized fixed step drives an RK4 stage out of the SPD cone
    traj = flow.integrate(H3, np.eye(3), "unnormalized", 10.0, fixed_step=10.0)
    assert traj.blow_up
    assert len(traj.times) == 1


def test_self_similarity_along_soliton_and_perturbation():
    dev, _ = flow.self_similarity_check(H3, np.eye(3), t_grid=np.linspace(0, 0.5, 6))
    assert dev <= 1e-6
    # every left-invariant metric on H3 is a soliton, so perturb on H5 instead
    h5 = ALGEBRAS["h5"]
    base, _ = flow.self_similarity_check(h5, np.eye(5))
    perturbed, _ = flow.self_similarity_check(h5, np.diag([1.5, 1, 1, 1, 1]))
    assert perturbed > base + 1e-3
    # the H3 perturbation stays a soliton
    assert flow.self_similarity_check(H3, np.diag([1.5, 1, 1]))[0] <= 1e-6


def test_finsler_flow_residual_examples():
    s = structure("abelian")
    fit = soliton.semialgebraic_fit(s, soliton.sphere_directions(s.A, 8))
    assert flow.finsler_flow_residual(s, fit, soliton.sphere_directions(s.A, 8)) == 0.0
    s = structure("h3")
    d = soliton.sphere_directions(s.A, 8)
    fit = soliton.semialgebraic_fit(s, d)
    assert flow.finsler_flow_residual(s, fit, d) <= 1e-6


def test_finsler_flow_residual_equals_fit_residual_for_randers():
    s = structure("h3", [0, 0, 0.2])
    d = soliton.sphere_directions(s.A, 16, seed=2)
    fit = soliton.semialgebraic_fit(s, d)
    assert abs(flow.finsler_flow_residual(s, fit, d) - fit.residual) <= 1e-8


def test_trajectory_exports():
    traj = flow.integrate(H3, np.eye(3), "normalized", 0.2)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,A11,A12,A13,A22,A23,A33"
    assert len(lines) == len(traj.times) + 1
    data = json.loads(traj.to_json())
    assert data["kind"] == "normalized"
    np.testing.assert_allclose(np.array(data["metrics"][-1]), traj.final)
