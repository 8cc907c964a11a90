import numpy as np
import pytest

from gmotv.prior import (
    PriorConfig,
    RankError,
    check_structure,
    grad_S_majorized,
    grad_S_RF,
    majorized_RF,
    penalty_R,
    penalty_RF,
)
from gmotv.signal import DerivativeBank, DimensionError, derivative_stack

from conftest import central_diff, rel_err

TINY = PriorConfig(0.0, 1e-30)


def random_instance(rng, K=None, N=None, lambda_F=None):
    K = K or int(rng.integers(1, 5))
    N = N or int(rng.integers(K + 2, 40))
    stack = rng.normal(size=(K, N))
    S = rng.normal(size=(K, K)) + 2 * np.eye(K)
    lf = float(rng.uniform(0, 1)) if lambda_F is None else lambda_F
    return stack, S, PriorConfig(lf, 1e-10)


def test_penalty_zero_stack():
    assert penalty_R(np.zeros((2, 5)), np.eye(2), TINY) == pytest.approx(0.0, abs=1e-12)


def test_penalty_reduces_to_tv1():
    assert penalty_R([[1, 0, -1, 0]], [[1.0]], TINY) == pytest.approx(2.0, abs=1e-12)


def test_penalty_euclidean():
    assert penalty_R([[3, 0], [4, 0]], np.eye(2), TINY) == pytest.approx(5.0, abs=1e-12)


def test_penalty_matches_tv_functional(rng):
    g = rng.normal(size=30)
    v = derivative_stack(g, DerivativeBank.up_to(1))
    assert penalty_R(v, [[1.0]], TINY) == pytest.approx(np.sum(np.abs(np.diff(np.r_[g[-1], g]))), rel=1e-12)


def test_penalty_dimension_mismatch():
    with pytest.raises(DimensionError):
        penalty_R(np.zeros((2, 5)), np.eye(3))


def test_penalty_RF_examples():
    assert penalty_RF(np.zeros((2, 4)), np.eye(2), TINY) == pytest.approx(0.0, abs=1e-12)
    for s in (0.1, 1.0, 3.7):
        assert penalty_RF([[1.0, 2.0]], [[s]], TINY) == pytest.approx(3 * s - np.log(s), rel=1e-12)
    assert penalty_RF(np.zeros((2, 3)), 2 * np.eye(2), TINY) == pytest.approx(-np.log(4), rel=1e-12)


def test_penalty_RF_frobenius_is_squared():
    cfg = PriorConfig(0.5, 1e-30)
    S = np.diag([2.0, 1.0])
    # R = 0, -1/2 log det(SS^T) = -log 2, 1/2 * 0.5 * ||S||_F^2 = 1.25
    assert penalty_RF(np.zeros((2, 3)), S, cfg) == pytest.approx(-np.log(2) + 1.25, rel=1e-12)


def test_singular_structure():
    with pytest.raises(RankError):
        penalty_RF(np.ones((2, 3)), [[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(RankError):
        check_structure(np.zeros((3, 3)))


def test_grad_scalar_stationary_point():
    g = grad_S_RF([[1.0, 2.0]], [[1 / 3]], TINY)
    assert g.shape == (1, 1)
    assert abs(g[0, 0]) < 1e-12


def test_grad_isotropic_stationary_point():
    np.testing.assert_allclose(grad_S_RF(np.eye(2), np.eye(2), TINY), 0.0, atol=1e-12)


def test_grad_matches_finite_differences_K3(rng):
    stack, S, cfg = random_instance(rng, K=3, N=20)
    fd = central_diff(lambda X: penalty_RF(stack, X, cfg), S)
    assert rel_err(grad_S_RF(stack, S, cfg), fd) < 1e-5


def test_majorized_gradient_tangent(rng):
    stack, S, cfg = random_instance(rng)
    np.testing.assert_allclose(grad_S_majorized(stack, S, S, cfg), grad_S_RF(stack, S, cfg), rtol=1e-14)


def test_majorized_gradient_finite_differences(rng):
    stack, S, cfg = random_instance(rng, K=3)
    anchor = S + 0.3 * rng.normal(size=S.shape)
    fd = central_diff(lambda X: majorized_RF(stack, X, anchor, cfg), S)
    assert rel_err(grad_S_majorized(stack, S, anchor, cfg), fd) < 1e-5


def test_majorized_gradient_zero_stack(rng):
    S = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    got = grad_S_majorized(np.zeros((3, 6)), S, np.eye(3), PriorConfig(0.0))
    np.testing.assert_allclose(got, -np.linalg.solve(S @ S.T, S), rtol=1e-12)


def test_positive_homogeneity(rng):
    for _ in range(20):
        stack, S, _ = random_instance(rng)
        c = rng.uniform(0.1, 10)
        assert penalty_R(stack, c * S, TINY) == pytest.approx(c * penalty_R(stack, S, TINY), rel=1e-10)


def test_majorization_property(rng):
    for _ in range(100):
        stack, anchor, cfg = random_instance(rng)
        S = anchor + rng.normal(size=anchor.shape)
        if np.linalg.matrix_rank(S) < S.shape[0]:
            continue
        assert majorized_RF(stack, S, anchor, cfg) >= penalty_RF(stack, S, cfg) - 1e-10
        assert majorized_RF(stack, anchor, anchor, cfg) == pytest.approx(
            penalty_RF(stack, anchor, cfg), abs=1e-10)


def test_gradient_consistency_100_draws(rng):
    worst = 0.0
    for _ in range(100):
        stack, S, cfg = random_instance(rng)
        fd = central_diff(lambda X: penalty_RF(stack, X, cfg), S, step=1e-6)
        worst = max(worst, rel_err(grad_S_RF(stack, S, cfg), fd))
    assert worst < 1e-5


@pytest.mark.parametrize("kw", [{"lambda_F": -1.0}, {"eps_smooth": 0.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PriorConfig(**kw)
