import numpy as np
import pytest

from gmotv.mmkl import MmKlConfig, accumulate_A, eig_sym, load_structure, mm_kl, save_structure
from gmotv.prior import PriorConfig, RankError, grad_S_RF, penalty_RF


def test_accumulate_scalar():
    np.testing.assert_allclose(accumulate_A([[1.0, 2.0]], [[1.0]], 1e-30), [[3.0]], rtol=1e-14)


def test_accumulate_zero_stack():
    np.testing.assert_array_equal(accumulate_A(np.zeros((3, 5)), np.eye(3), 1e-10), np.zeros((3, 3)))


def test_accumulate_symmetric_psd(rng):
    stack = rng.normal(size=(4, 50))
    A = accumulate_A(stack, rng.normal(size=(4, 4)) + 2 * np.eye(4), 1e-10)
    assert np.max(np.abs(A - A.T)) <= 1e-14
    assert np.linalg.eigvalsh(A).min() >= -1e-12


def test_eig_identity():
    U, d = eig_sym(np.eye(3))
    np.testing.assert_array_equal(d, [1, 1, 1])
    np.testing.assert_array_equal(U, np.eye(3))


def test_eig_diagonal():
    U, d = eig_sym(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(d, [2, 1])
    np.testing.assert_array_equal(U, np.eye(2))


def test_eig_ascending_diagonal_is_sorted():
    U, d = eig_sym(np.diag([1.0, 3.0, 2.0]))
    np.testing.assert_array_equal(d, [3, 2, 1])
    np.testing.assert_array_equal(U, np.eye(3)[:, [1, 2, 0]])


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_eig_reconstruction(rng, K):
    for _ in range(25):
        M = rng.normal(size=(K, K))
        A = M + M.T
        U, d = eig_sym(A)
        assert np.linalg.norm(A - U @ np.diag(d) @ U.T) <= 1e-10
        assert np.max(np.abs(U.T @ U - np.eye(K))) <= 1e-12
        assert np.all(np.diff(d) <= 0)
        np.testing.assert_allclose(d, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-12)
        for col in U.T:
            assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0


def test_eig_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        eig_sym([[1.0, 2.0], [0.0, 1.0]])


def test_scalar_fixed_point():
    res = mm_kl([[1.0, 2.0]], [[1.0]], MmKlConfig(0.0, 1e-12, 1e-30))
    assert res.converged
    assert res.S[0, 0] == pytest.approx(1 / 3, abs=1e-8)
    assert res.final_grad_norm <= 1e-12


def test_isotropic_fixed_point_one_step():
    res = mm_kl(np.eye(2), np.eye(2), MmKlConfig(0.0, 1e-9, 1e-30))
    assert res.iterations == 1
    np.testing.assert_allclose(res.S, np.eye(2), atol=1e-12)


def test_isotropic_with_frobenius_weight_first_update():
    # A_0 = I at S0 = I, so the closed-form update is (1 + 3)^(-1/2) I
    res = mm_kl(np.eye(2), np.eye(2), MmKlConfig(3.0, 1e-10, 1e-30, max_iters=1))
    np.testing.assert_allclose(res.S, 0.5 * np.eye(2), atol=1e-8)


def test_isotropic_with_frobenius_weight_converged():
    # R_F(b I) = 2b - 2 log b + 3 b^2 is minimised where 3b^2 + b - 1 = 0
    beta = (np.sqrt(13.0) - 1.0) / 6.0
    res = mm_kl(np.eye(2), np.eye(2), MmKlConfig(3.0, 1e-12, 1e-30))
    assert res.converged
    np.testing.assert_allclose(res.S, beta * np.eye(2), atol=1e-10)


def test_rank_deficient_stack():
    with pytest.raises(RankError, match="smallest eigenvalue"):
        mm_kl(np.zeros((2, 10)), np.eye(2), MmKlConfig())
    stack = np.vstack([np.arange(8.0), 2 * np.arange(8.0)])
    with pytest.raises(RankError):
        mm_kl(stack, np.eye(2), MmKlConfig())


def test_frobenius_weight_regularizes_degenerate_stack():
    res = mm_kl(np.zeros((2, 10)), np.eye(2), MmKlConfig(lambda_F=0.25))
    np.testing.assert_allclose(res.S, 2 * np.eye(2), atol=1e-12)


def test_non_convergence_flag(rng):
    res = mm_kl(rng.normal(size=(3, 40)), np.eye(3), MmKlConfig(0.0, 1e-14, max_iters=2))
    assert res.iterations == 2
    assert not res.converged


def _iterates(stack, S0, cfg, n):
    S = S0
    out = []
    for _ in range(n):
        S = mm_kl(stack, S, MmKlConfig(cfg.lambda_F, 1e-300, cfg.eps_smooth, max_iters=1)).S
        out.append(S)
    return out


def test_iterates_have_orthogonal_rows(rng):
    for lf in (0.0, 0.7):
        stack = rng.normal(size=(4, 60)) * rng.uniform(0.1, 5, size=(4, 1))
        for S in _iterates(stack, np.eye(4), MmKlConfig(lambda_F=lf), 10):
            G = S @ S.T
            np.testing.assert_allclose(G - np.diag(np.diag(G)), 0.0, atol=1e-10)


def test_cost_non_increasing(rng):
    for trial in range(10):
        K = int(rng.integers(1, 5))
        stack = rng.normal(size=(K, K)) @ rng.standard_t(2, size=(K, 80))
        lf = [0.0, 1e-3, 1.0][trial % 3]
        res = mm_kl(stack, np.eye(K), MmKlConfig(lf, 1e-9))
        assert np.all(np.diff(res.history) <= 1e-9)
        cfg = PriorConfig(lf, 1e-10)
        assert res.history[-1] == pytest.approx(penalty_RF(stack, res.S, cfg), rel=1e-12)


def test_converged_gradient_norm(rng):
    stack = rng.normal(size=(3, 100))
    cfg = MmKlConfig(0.1, 1e-8)
    res = mm_kl(stack, np.eye(3), cfg)
    assert res.converged
    assert np.linalg.norm(grad_S_RF(stack, res.S, cfg.prior)) <= 1e-8


def test_permutation_invariance(rng):
    stack = rng.normal(size=(2, 64))
    a = mm_kl(stack, np.eye(2)).S
    b = mm_kl(stack[:, rng.permutation(64)], np.eye(2)).S
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_structure_file_roundtrip(tmp_path, rng):
    S = rng.normal(size=(4, 4)) + 3 * np.eye(4)
    path = tmp_path / "S.txt"
    save_structure(path, S)
    lines = path.read_text().splitlines()
    assert lines[0] == "4" and len(lines) == 5 and "e" in lines[1]
    np.testing.assert_array_equal(load_structure(path), S)


def test_structure_file_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2\n1 0 0\n")
    with pytest.raises(ValueError, match="expected 4"):
        load_structure(p)
