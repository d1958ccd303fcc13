import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylot.costs import (CameronMartin, CoordinateSeparable, GrowthEnvelope,
                         TranslationInvariant, bounded_saturating,
                         check_growth_envelope, check_projection_contraction,
                         coercivity_radius, cost_matrix, evaluate,
                         load_profile_csv, power, table)
from cylot.measures import make_discrete, point_mass
from cylot.projections import Projection

from oracles import quadratic_matrix_loop

QUAD = TranslationInvariant(power(2))


def test_power_profile_invariants():
    h = power(1.5)
    z = np.linspace(0, 10, 101)
    assert h(0.0) == 0.0
    assert np.all(np.diff(h(z)) > 0)
    assert h.sup_value == math.inf and h.monotone


def test_saturating_profile_invariants():
    h = bounded_saturating(2.0, scale=0.5)
    z = np.linspace(0, 50, 501)
    assert np.all(np.diff(h(z)) >= 0)
    assert abs(h(1e3) - 2.0) <= 1e-12
    assert h.sup_value == 2.0


def test_table_profile_takes_lower_value_at_jumps():
    h = table([0.0, 1.0, 1.0, 2.0], [0.0, 1.0, 3.0, 3.0])
    np.testing.assert_allclose(h([0.5, 1.0, 1.5, 5.0]), [0.5, 1.0, 3.0, 3.0])
    assert h.sublevel_sup(2.0) == 1.0


def test_profile_csv(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("z,h\n0,0\n1,2\n")
    h = load_profile_csv(p)
    assert h(0.5) == 1.0


def test_evaluate_examples():
    assert evaluate(QUAD, [1.0, 2.0], [1.0, 2.0]) == 0.0
    assert evaluate(QUAD, [3.0], [1.0]) == 4.0
    cm = CameronMartin((1.0, 0.5))
    assert evaluate(cm, [0.0, 0.0], [0.0, 0.0], 0, 1) == math.inf
    assert evaluate(cm, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(math.sqrt(5.0))
    with pytest.raises(ValueError, match="dimension mismatch"):
        evaluate(QUAD, [0.0], [0.0, 1.0])


def test_separable_cost_uses_differences():
    c = CoordinateSeparable(power(0.5), (power(2), power(1)))
    assert evaluate(c, [1.0, 1.0], [0.0, -2.0]) == pytest.approx(math.sqrt(1.0 + 3.0))
    assert evaluate(c, [5.0, 5.0], [5.0, 5.0]) == 0.0


def test_cost_matrix_examples():
    assert cost_matrix(QUAD, point_mass([2.0]), point_mass([2.0])).tolist() == [[0.0]]
    line = make_discrete([[0.0], [1.0]], [1, 1])
    assert cost_matrix(QUAD, line, line).tolist() == [[0.0, 1.0], [1.0, 0.0]]
    with pytest.raises(ValueError, match="dimension mismatch"):
        cost_matrix(QUAD, line, point_mass([0.0, 0.0]))


def test_cost_matrix_matches_elementwise_calls():
    rng = np.random.default_rng(4)
    X, Y = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    mu, nu = make_discrete(X, np.ones(3)), make_discrete(Y, np.ones(3))
    np.testing.assert_allclose(cost_matrix(QUAD, mu, nu), quadratic_matrix_loop(X, Y), rtol=1e-14)
    for c in (CoordinateSeparable(power(1), (power(2),)), TranslationInvariant(bounded_saturating(1.0))):
        C = cost_matrix(c, mu, nu)
        for i in range(3):
            for j in range(3):
                assert C[i, j] == pytest.approx(evaluate(c, X[i], Y[j]), rel=1e-14)


def test_cameron_martin_matrix_has_infinite_blocks():
    mu = make_discrete([[0.0], [1.0]], [1, 1], tail=[0, 1])
    nu = make_discrete([[0.0], [2.0]], [1, 1], tail=[0, 0])
    C = cost_matrix(CameronMartin((0.5,)), mu, nu)
    assert C[0].tolist() == [0.0, 4.0]
    assert np.all(np.isinf(C[1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_cost_matrix_is_nonnegative(D, seed):
    rng = np.random.default_rng(seed)
    mu = make_discrete(rng.standard_normal((4, D)), np.ones(4), tail=rng.integers(0, 2, 4))
    nu = make_discrete(rng.standard_normal((5, D)), np.ones(5), tail=rng.integers(0, 2, 5))
    for c in (QUAD, CameronMartin(tuple(1.0 / np.arange(1, D + 1))),
              CoordinateSeparable(power(1), (bounded_saturating(1.0),))):
        C = cost_matrix(c, mu, nu)
        assert np.all(C >= 0)


def test_coercivity_examples():
    assert coercivity_radius(QUAD, 1.0, 0.1, 4.0) == 3.0
    h = bounded_saturating(1.0)
    R = coercivity_radius(TranslationInvariant(h), 1.0, 0.5, 10.0)
    assert R == pytest.approx(1.0 - math.log(0.5))
    with pytest.raises(ValueError, match="delta out of range"):
        coercivity_radius(TranslationInvariant(h), 1.0, 1.0, 10.0)
    with pytest.raises(ValueError, match="delta out of range"):
        coercivity_radius(QUAD, 1.0, 0.0, 10.0)


def test_coercivity_separable_and_cameron_martin():
    c = CoordinateSeparable(power(1), (power(2),))
    # sum of squares < 4 along each coordinate: |y_j - x_j| <= 2
    assert coercivity_radius(c, 1.0, 0.5, 4.0, dim=2) == pytest.approx(1.0 + math.sqrt(8.0))
    with pytest.raises(ValueError, match="dim"):
        coercivity_radius(c, 1.0, 0.5, 4.0)
    assert coercivity_radius(CameronMartin((1.0, 0.25)), 2.0, 0.5, 3.0) == 5.0
    # a bounded coordinate profile leaves its direction unconstrained
    flat = CoordinateSeparable(power(1), (bounded_saturating(0.5),))
    assert coercivity_radius(flat, 1.0, 0.1, 0.8, dim=1) == math.inf


def _scan_counterexamples(h_fn, sup_h, R, delta, M, Rp):
    """1-d grid scan of the implication with an independent profile formula."""
    xs = np.arange(-R + 0.05, R, 0.05)
    ys = np.arange(-2 * Rp, 2 * Rp + 1e-12, 0.05)
    level = min(sup_h - delta, M)
    hits = h_fn(np.abs(xs[:, None] - ys[None, :])) < level
    return int(np.sum(hits & (np.abs(ys)[None, :] >= Rp)))


@pytest.mark.parametrize("R, delta, M", [(1.0, 0.5, 4.0), (0.5, 0.1, 1.0), (2.0, 0.3, 0.2)])
def test_coercivity_grid_scan(R, delta, M):
    Rp = coercivity_radius(QUAD, R, delta, M)
    assert _scan_counterexamples(lambda z: z * z, math.inf, R, delta, M, Rp) == 0
    sat = TranslationInvariant(bounded_saturating(1.0, 0.7))
    Rp = coercivity_radius(sat, R, delta, M)
    f = lambda z: -np.expm1(-z / 0.7)  # noqa: E731
    assert _scan_counterexamples(f, 1.0, R, delta, M, Rp) == 0


def test_growth_envelope_identity_scaling():
    c = TranslationInvariant(power(2), GrowthEnvelope(lambda l: max(1.0, 4 * l * l),
                                                      lambda l: max(1.0, 4 * l * l)))
    rng = np.random.default_rng(1)
    samples = [(rng.standard_normal(3), rng.standard_normal(3), 1.0) for _ in range(50)]
    assert check_growth_envelope(c, samples) == 0.0


def test_growth_envelope_matches_direct_scan():
    f = lambda l: max(1.0, 4 * l * l)  # noqa: E731
    c = TranslationInvariant(power(2), GrowthEnvelope(f, f))
    rng = np.random.default_rng(2)
    samples = [(rng.standard_normal(2), rng.standard_normal(2), float(rng.uniform(0.1, 3)))
               for _ in range(200)]
    expect = 0.0
    for x, y, l in samples:
        base = float(np.sum((x - y) ** 2))
        expect = max(expect, float(np.sum((l * x - y) ** 2)) - f(l) * base,
                     float(np.sum((x - l * y) ** 2)) - f(l) * base)
    assert check_growth_envelope(c, samples) == pytest.approx(expect, abs=1e-12)


def test_quadratic_envelope_fails_on_the_diagonal():
    # c(x, x) = 0 while c(2x, x) > 0: no multiplicative envelope holds there
    f = lambda l: max(1.0, 4 * l * l)  # noqa: E731
    c = TranslationInvariant(power(2), GrowthEnvelope(f, f))
    x = np.array([1.0, 0.0])
    assert check_growth_envelope(c, [(x, x, 2.0)]) == pytest.approx(1.0)


def test_growth_envelope_errors():
    with pytest.raises(ValueError, match="envelope"):
        check_growth_envelope(QUAD, [])
    zero = TranslationInvariant(power(2), GrowthEnvelope(lambda l: 0.0, lambda l: 0.0))
    assert check_growth_envelope(zero, [(np.ones(2), np.zeros(2), 1.5)]) > 0
    with pytest.raises(ValueError, match="positive"):
        check_growth_envelope(zero, [(np.ones(2), np.zeros(2), 0.0)])


def test_contraction_identity_is_zero():
    rng = np.random.default_rng(3)
    X, Y = rng.standard_normal((30, 4)), rng.standard_normal((30, 4))
    I = Projection.truncation(4, 4)
    assert check_projection_contraction(QUAD, I, I, (X, Y)) == 0.0


@pytest.mark.parametrize("cost", [QUAD, CameronMartin((1.0, 0.5, 0.25, 0.125)),
                                  TranslationInvariant(bounded_saturating(2.0)),
                                  CoordinateSeparable(power(1), (power(2),))])
def test_truncations_contract(cost):
    rng = np.random.default_rng(5)
    X, Y = rng.standard_normal((200, 4)), rng.standard_normal((200, 4))
    for k in range(5):
        P = Projection.truncation(k, 4)
        assert check_projection_contraction(cost, P, P, (X, Y)) <= 0.0


def test_contraction_list_of_pairs_and_tails():
    P = Projection.truncation(1, 2)
    pairs = [(np.array([1.0, 1.0]), np.array([0.0, 0.0]))]
    assert check_projection_contraction(QUAD, P, P, pairs) == pytest.approx(-1.0)
    cm = CameronMartin((1.0, 1.0))
    X, Y = np.ones((2, 2)), np.zeros((2, 2))
    assert check_projection_contraction(cm, P, P, (X, Y), [0, 0], [1, 1]) == 0.0
