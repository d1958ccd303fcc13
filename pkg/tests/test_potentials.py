import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylot.costs import TranslationInvariant, bounded_saturating, cost_matrix, power
from cylot.measures import make_discrete, point_mass
from cylot.potentials import (GridPotential, bump, c_transform, check_membership,
                              feasibility_violation, kernel_average, make_mollifier,
                              mollify_truncate, normalize_pair, smooth_feasible_pair)
from cylot.solver import solve_exact

QUAD = TranslationInvariant(power(2))


def _feasible_pair(rng, n, m, inf_frac=0.0):
    C = rng.uniform(0, 5, (n, m))
    if inf_frac:
        C[rng.random((n, m)) < inf_frac] = np.inf
        C[np.arange(n), rng.integers(0, m, n)] = rng.uniform(0, 5, n)
    psi = rng.normal(0, 2, m)
    phi = np.min(C - psi[None, :], axis=1) - rng.uniform(0, 1, n) * (rng.random(n) < 0.5)
    return C, phi, psi


# ---------------------------------------------------------------- c-transform

def test_c_transform_of_zero_is_row_min():
    C = np.array([[3.0, 1.0, 2.0], [0.5, np.inf, 4.0]])
    np.testing.assert_array_equal(c_transform(np.zeros(3), C), [1.0, 0.5])


def test_c_transform_shift():
    rng = np.random.default_rng(0)
    C, psi = rng.uniform(0, 3, (4, 5)), rng.normal(size=5)
    np.testing.assert_allclose(c_transform(psi + 1.25, C), c_transform(psi, C) - 1.25, atol=1e-15)


def test_c_transform_matches_double_loop():
    rng = np.random.default_rng(1)
    C, psi = rng.uniform(0, 3, (3, 3)), rng.normal(size=3)
    expect = [min(C[i, j] - psi[j] for j in range(3)) for i in range(3)]
    np.testing.assert_allclose(c_transform(psi, C), expect, atol=0)


def test_c_transform_undefined_row():
    with pytest.raises(ValueError, match="transform undefined at atom 1"):
        c_transform(np.zeros(2), [[0.0, 1.0], [np.inf, np.inf]])


# ---------------------------------------------------------------- violation

def test_violation_of_exact_duals():
    rng = np.random.default_rng(2)
    C = rng.uniform(0, 4, (8, 6))
    a, b = np.full(8, 1 / 8), np.full(6, 1 / 6)
    d = solve_exact(C, a, b).dual
    assert feasibility_violation(d.phi, d.psi, C) <= 1e-9
    raised = d.phi.copy()
    raised[0] += 1.0
    assert feasibility_violation(raised, d.psi, C) >= 1 - 1e-9


def test_violation_matches_double_loop():
    rng = np.random.default_rng(3)
    C = rng.uniform(0, 4, (5, 4))
    C[1, 2] = np.inf
    phi, psi = rng.normal(size=5), rng.normal(size=4)
    expect = max(phi[i] + psi[j] - C[i, j] for i in range(5) for j in range(4) if np.isfinite(C[i, j]))
    assert feasibility_violation(phi, psi, C) == expect


# ---------------------------------------------------------------- membership

def _scan_report(phi, psi, C):
    n, m = C.shape
    fin = [(i, j) for i in range(n) for j in range(m) if math.isfinite(C[i, j])]
    return {
        "inf_phi": min(phi), "sup_phi": max(phi), "inf_psi": min(psi), "sup_psi": max(psi),
        "sup_cost": max(C[i, j] for i in range(n) for j in range(m)),
        "inf_cost_minus_phi": min(C[i, j] - phi[i] for i, j in fin),
        "sharp_residual": min(C[i, j] - phi[i] - psi[j] for i, j in fin),
        "max_violation": max(phi[i] + psi[j] - C[i, j] for i, j in fin),
    }


def test_membership_numbers_match_scan():
    rng = np.random.default_rng(4)
    for _ in range(20):
        C, phi, psi = _feasible_pair(rng, 4, 5, inf_frac=0.2)
        phi = phi + rng.normal(size=4)
        rep = check_membership(phi, psi, C, 0.0)
        for key, val in _scan_report(phi, psi, C).items():
            assert getattr(rep, key) == pytest.approx(val, abs=1e-12)
        assert rep.recompute_verdicts() == rep.verdicts


def test_membership_inf_bound_fails_below_minus_delta():
    C = np.ones((2, 2))
    delta = 0.1
    rep = check_membership(np.full(2, -2 * delta), np.zeros(2), C, delta)
    assert not rep.verdicts["inf_phi_in_range"]
    assert not rep.ok


def test_membership_of_normalized_pair():
    rng = np.random.default_rng(5)
    C, phi, psi = _feasible_pair(rng, 4, 4)
    _, _, _, rep = normalize_pair(phi, psi, C)
    assert rep.ok
    assert rep.achieved_delta == 0.0


# ---------------------------------------------------------------- normalization

def test_normalize_fixed_point():
    C = np.array([[0.0, 2.0], [2.0, 0.0]])
    phi, psi = np.array([0.0, 1.0]), np.array([0.0, -1.0])
    assert check_membership(phi, psi, C).ok
    ph, ps, lam, _ = normalize_pair(phi, psi, C)
    np.testing.assert_array_equal(ph, phi)
    np.testing.assert_array_equal(ps, psi)
    assert lam == 0.0


def test_normalize_constant_phi():
    C = np.array([[0.0, 3.0], [1.0, 2.0]])
    ph, _, _, _ = normalize_pair(np.full(2, -3.0), np.zeros(2), C)
    assert ph.min() == 0.0


def test_normalize_rejects_infeasible():
    with pytest.raises(ValueError, match="max violation"):
        normalize_pair(np.ones(2), np.ones(2), np.ones((2, 2)))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6), st.integers(1, 6), st.booleans())
def test_normalize_conditions(seed, n, m, with_inf):
    rng = np.random.default_rng(seed)
    C, phi, psi = _feasible_pair(rng, n, m, 0.3 if with_inf else 0.0)
    a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
    ph, ps, _, _ = normalize_pair(phi, psi, C)
    s = _scan_report(ph, ps, C)
    assert abs(s["inf_phi"]) <= 1e-9
    assert s["sup_phi"] <= s["sup_cost"] + 1e-9
    assert s["inf_psi"] >= -s["sup_phi"] - 1e-9
    assert s["sup_psi"] >= -1e-9
    assert abs(s["sharp_residual"]) <= 1e-9
    assert s["max_violation"] <= 1e-9
    assert a @ ph + b @ ps >= a @ phi + b @ psi - 1e-9


# ---------------------------------------------------------------- mollifier

def test_bump_profile():
    z = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5])
    v = bump(z)
    assert v[0] == v[1] == v[2] == 1.0
    assert v[3] == pytest.approx(0.5)
    assert v[4] == v[5] == 0.0
    zz = np.linspace(0, 1.2, 2001)
    assert np.all(np.diff(bump(zz)) <= 0)


def test_alpha_one_by_symmetry():
    # eta is 1 on [0, 1/2] and point-symmetric about (3/4, 1/2) on [1/2, 1]
    m = make_mollifier(1, 1.0, 1 / 64)
    assert 1.0 < m.alpha < 2.0
    assert m.alpha == pytest.approx(1.5, abs=1e-9)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_mollifier_mass(k, rho):
    m = make_mollifier(k, rho, rho / 16)
    assert abs(m.mass() - 1.0) <= 1e-6
    assert abs(m.mass(m.quad_pitch / 2) - 1.0) <= 1e-6


def test_mollifier_pitch_too_coarse():
    with pytest.raises(ValueError, match="pitch too coarse"):
        make_mollifier(1, 0.5, 0.1)


# ---------------------------------------------------------------- mollify_truncate

def _grid(values_fn, L=2.0, h=1 / 32, k=1):
    n = int(round(2 * L / h)) + 1
    axes = [np.linspace(-L, L, n)] * k
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = values_fn(*mesh)
    return GridPotential(np.zeros(k), np.full(k, L), h, vals)


@pytest.mark.parametrize("k", [1, 2])
def test_truncating_zero(k):
    R, rho, drop = 1.0, 0.25, 0.1
    phi = _grid(lambda *x: np.zeros_like(x[0]), k=k, h=1 / 16)
    out = mollify_truncate(phi, R, rho, drop, make_mollifier(k, rho, rho / 8))
    assert out.values.min() >= -drop - 1e-15 and out.values.max() <= 1e-15
    r = np.sqrt(np.sum(out.nodes() ** 2, axis=1))
    assert np.all(out.values.ravel()[r >= R + 2 * rho] == 0.0)
    assert out.values.ravel()[np.argmin(r)] == pytest.approx(-drop, abs=1e-15)


def test_truncating_constant():
    phi = _grid(lambda x: np.full_like(x, 2.0))
    out = mollify_truncate(phi, 1.0, 0.2, 0.1, make_mollifier(1, 0.2, 0.025))
    assert out.evaluate([[0.0]])[0] == pytest.approx(1.9, abs=1e-12)
    assert out.evaluate([[0.013]])[0] == pytest.approx(1.9, abs=1e-12)


def test_truncating_premise_failure():
    phi = _grid(lambda x: np.where(np.abs(x) < 0.05, -10.0, 0.0))
    with pytest.raises(ValueError, match="rho too large for requested drop"):
        mollify_truncate(phi, 1.0, 0.3, 0.01, make_mollifier(1, 0.3, 0.03))


def test_kernel_average_reproduces_constants():
    src = np.full((41, 41), 3.5)
    X = np.random.default_rng(6).uniform(-0.3, 0.3, (50, 2))
    np.testing.assert_allclose(kernel_average(src, np.array([-1.0, -1.0]), 0.05, 0.2, X), 3.5, rtol=1e-14)


# ---------------------------------------------------------------- smoothing

def _independent_check(res, mu, nu, cost_fn, extra=()):
    """Feasibility on a pitch-halved product grid plus far-away points."""
    h = res.phi.pitch / 2
    L = float(res.phi.half_width[0])
    V = np.arange(-L, L + h / 2, h)[:, None]
    V = np.vstack([V, np.array(extra, dtype=float).reshape(-1, 1)])
    pv, qv = res.phi.evaluate(V), res.psi.evaluate(V)
    viol = -np.inf
    for s in range(0, len(V), 512):
        block = pv[s:s + 512, None] + qv[None, :] - cost_fn(V[s:s + 512], V.T)
        viol = max(viol, float(block.max()))
    obj = mu.weights @ res.phi.evaluate(mu.points) + nu.weights @ res.psi.evaluate(nu.points)
    return viol, obj


def test_smoothing_point_masses():
    mu = nu = point_mass([0.0])
    C = cost_matrix(QUAD, mu, nu)
    sol = solve_exact(C, mu.weights, nu.weights)
    phi, psi, loss = smooth_feasible_pair(sol.dual, QUAD, mu, nu, 0.1)
    assert loss <= 0.1
    res = smooth_feasible_pair(sol.dual, QUAD, mu, nu, 0.1)
    viol, _ = _independent_check(res, mu, nu, lambda x, y: (x - y) ** 2)
    assert viol <= 1e-9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_smoothing_one_dimensional(seed):
    rng = np.random.default_rng(seed)
    mu = make_discrete(rng.uniform(-1, 1, (4, 1)), rng.uniform(1, 2, 4))
    nu = make_discrete(rng.uniform(-1, 1.5, (4, 1)), rng.uniform(1, 2, 4))
    C = cost_matrix(QUAD, mu, nu)
    sol = solve_exact(C, mu.weights, nu.weights)
    eps = 0.05 * (sol.report.primal_cost + 1)
    res = smooth_feasible_pair(sol.dual, QUAD, mu, nu, eps)
    viol, obj = _independent_check(res, mu, nu, lambda x, y: (x - y) ** 2, extra=[-40.0, 40.0])
    assert viol <= 1e-9
    assert obj >= sol.report.primal_cost - eps
    assert obj == pytest.approx(res.objective, abs=1e-12)


def test_smoothing_bounded_cost():
    cost = TranslationInvariant(bounded_saturating(4.0))
    mu = make_discrete([[-0.5], [0.2], [0.9]], [1, 1, 1])
    nu = make_discrete([[0.0], [1.1]], [2, 1])
    C = cost_matrix(cost, mu, nu)
    sol = solve_exact(C, mu.weights, nu.weights)
    res = smooth_feasible_pair(sol.dual, cost, mu, nu, 0.1)
    f = lambda x, y: 4.0 * -np.expm1(-np.abs(x - y))  # noqa: E731
    viol, obj = _independent_check(res, mu, nu, f)
    assert viol <= 1e-9
    assert obj >= sol.report.primal_cost - 0.1


def test_smoothing_errors():
    mu = point_mass([0.0])
    sol = solve_exact([[0.0]], [1.0], [1.0])
    with pytest.raises(ValueError, match="grid budget exceeded"):
        smooth_feasible_pair(sol.dual, QUAD, mu, mu, 0.1, max_nodes=10)
    with pytest.raises(ValueError, match="eps"):
        smooth_feasible_pair(sol.dual, QUAD, mu, mu, 0.0)
    far = point_mass([0.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="dimension"):
        smooth_feasible_pair(sol.dual, QUAD, far, far, 0.1)
