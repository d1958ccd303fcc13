import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cylot.measures import make_discrete
from cylot.projections import Projection, apply, pushforward, truncation_family


def test_family_covers_zero_to_dim():
    fam = truncation_family(3)
    assert [P.rank for P in fam] == [0, 1, 2, 3]


def test_truncation_examples():
    x = np.array([1.0, 2.0, 3.0])
    fam = truncation_family(3)
    np.testing.assert_array_equal(apply(fam[3], x), x)
    np.testing.assert_array_equal(apply(fam[0], x), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(apply(fam[2], x), [1.0, 2.0, 0.0])


def test_apply_matches_loop_product():
    rng = np.random.default_rng(0)
    A = np.linalg.qr(rng.standard_normal((5, 2)))[0].T
    P = Projection.onto_rows(A)
    X = rng.standard_normal((7, 5))
    expect = np.zeros_like(X)
    for i in range(7):
        for r in range(5):
            expect[i, r] = sum(P.matrix[r, c] * X[i, c] for c in range(5))
    np.testing.assert_allclose(apply(P, X), expect, atol=1e-14)


def test_projection_errors():
    with pytest.raises(ValueError, match="rank"):
        Projection(3, 4)
    with pytest.raises(ValueError, match="idempotent"):
        Projection(2, 1, np.array([[2.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="dimension mismatch"):
        apply(Projection.truncation(1, 3), np.zeros(2))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(
    lambda D: st.tuples(st.integers(0, D), arrays(float, (4, D), elements=st.floats(-1e3, 1e3)))))
def test_truncation_is_idempotent(args):
    k, X = args
    P = Projection.truncation(k, X.shape[1])
    once = apply(P, X)
    np.testing.assert_allclose(apply(P, once), once, atol=1e-12)
    assert P.rank <= P.dim


def test_pushforward_identity_keeps_measure():
    m = make_discrete([[0.0, 1.0], [2.0, 3.0]], [1, 3])
    assert pushforward(Projection.truncation(2, 2), m) == m


def test_pushforward_rank_zero_merges_everything():
    m = make_discrete([[0.0, 1.0], [2.0, 3.0], [5.0, -1.0]], [1, 1, 2])
    out = pushforward(Projection.truncation(0, 2), m)
    assert out.size == 1
    np.testing.assert_array_equal(out.points, [[0.0, 0.0]])
    assert out.weights[0] == 1.0


def test_pushforward_merges_collisions():
    m = make_discrete([[1.0, 2.0, 3.0], [1.0, 2.0, -7.0], [0.0, 0.0, 0.0]], [1, 2, 1])
    out = pushforward(Projection.truncation(2, 3), m)
    assert out.size == 2
    np.testing.assert_allclose(out.weights, [0.75, 0.25])


def test_pushforward_keeps_tail_classes_apart():
    m = make_discrete([[1.0, 2.0], [1.0, 5.0]], [1, 1], tail=[0, 1])
    out = pushforward(Projection.truncation(1, 2), m)
    assert out.size == 2
    np.testing.assert_array_equal(out.tail, [0, 1])
