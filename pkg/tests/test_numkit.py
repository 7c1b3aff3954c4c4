import numpy as np
import pytest

from gestkit import numkit
from gestkit.errors import DimensionError, DomainError


def random_symmetric(rng, n):
    b = rng.standard_normal((n, n))
    return 0.5 * (b + b.T)


class TestSymEig:
    def test_diagonal_matrix(self):
        res = numkit.sym_eig(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(res.values, [2.0, 1.0])
        np.testing.assert_allclose(res.vectors, np.eye(2))

    def test_exchange_matrix_hand_solution(self):
        # Characteristic polynomial of [[0,1],[1,0]] is l^2 - 1.
        res = numkit.sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(res.values, [1.0, -1.0], atol=1e-12)
        inv_sqrt2 = 0.7071067811865476
        for col, expected in [(0, [inv_sqrt2, inv_sqrt2]), (1, [inv_sqrt2, -inv_sqrt2])]:
            v = res.vectors[:, col]
            sign = 1.0 if v @ expected > 0 else -1.0
            np.testing.assert_allclose(sign * v, expected, atol=1e-12)

    def test_psd_reconstruction(self):
        rng = np.random.default_rng(7)
        b = rng.standard_normal((6, 6))
        a = b @ b.T
        res = numkit.sym_eig(a)
        recon = res.vectors @ np.diag(res.values) @ res.vectors.T
        assert numkit.frobenius_norm(recon - a) <= 1e-8 * numkit.frobenius_norm(a)
        assert np.all(res.values >= -1e-10 * max(res.values.max(), 1.0))

    def test_random_suite_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(1, 51))
            a = random_symmetric(rng, n)
            res = numkit.sym_eig(a)
            norm = numkit.frobenius_norm(a)
            recon = res.vectors @ np.diag(res.values) @ res.vectors.T
            assert numkit.frobenius_norm(recon - a) <= 1e-8 * max(norm, 1.0)
            gram = res.vectors.T @ res.vectors
            assert numkit.frobenius_norm(gram - np.eye(n)) <= 1e-8 * n
            assert np.all(np.diff(res.values) <= 1e-12)

    def test_eigenpair_residuals(self):
        rng = np.random.default_rng(3)
        a = random_symmetric(rng, 20)
        res = numkit.sym_eig(a)
        bound = 1e-8 * (numkit.frobenius_norm(a) + 1.0)
        for i in range(20):
            q = res.vectors[:, i]
            assert np.linalg.norm(a @ q - res.values[i] * q) <= bound

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(5)
        a = random_symmetric(rng, 9)
        res = numkit.sym_eig(a)
        for j in range(9):
            k = np.argmax(np.abs(res.vectors[:, j]))
            assert res.vectors[k, j] > 0

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            numkit.sym_eig(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        a = np.eye(3)
        a[0, 0] = np.nan
        with pytest.raises(DomainError):
            numkit.sym_eig(a)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            numkit.sym_eig(np.array([[1.0, 2.0], [0.5, 1.0]]))


def penrose_errors(a, aplus):
    norm_a = max(numkit.frobenius_norm(a), 1e-300)
    norm_p = max(numkit.frobenius_norm(aplus), 1e-300)
    aap = a @ aplus
    paa = aplus @ a
    return (
        numkit.frobenius_norm(aap @ a - a) / norm_a,
        numkit.frobenius_norm(paa @ aplus - aplus) / norm_p,
        numkit.frobenius_norm(aap - aap.T) / max(numkit.frobenius_norm(aap), 1e-300),
        numkit.frobenius_norm(paa - paa.T) / max(numkit.frobenius_norm(paa), 1e-300),
    )


class TestPinv:
    def test_identity(self):
        np.testing.assert_allclose(numkit.pinv(np.eye(3)), np.eye(3), atol=1e-12)

    def test_rank_deficient_diagonal(self):
        np.testing.assert_allclose(
            numkit.pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-12
        )

    def test_column_vector_hand_value(self):
        # (v^T v)^{-1} v^T = v^T / 25 for v = (3, 4).
        result = numkit.pinv(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(result, [[0.12, 0.16]], atol=1e-12)

    @pytest.mark.parametrize("shape", [(7, 4), (4, 7), (6, 6)])
    def test_penrose_conditions_full_rank(self, shape):
        rng = np.random.default_rng(sum(shape))
        a = rng.standard_normal(shape)
        for err in penrose_errors(a, numkit.pinv(a)):
            assert err <= 1e-8

    def test_penrose_conditions_rank_deficient(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            m = int(rng.integers(2, 20))
            n = int(rng.integers(2, 20))
            r = int(rng.integers(1, min(m, n) + 1))
            a = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
            for err in penrose_errors(a, numkit.pinv(a)):
                assert err <= 1e-8

    def test_pinv_involution(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((8, 5))
        back = numkit.pinv(numkit.pinv(a))
        assert numkit.frobenius_norm(back - a) <= 1e-8 * numkit.frobenius_norm(a)

    def test_orthonormal_columns_give_transpose(self):
        rng = np.random.default_rng(37)
        q = numkit.sym_eig(random_symmetric(rng, 9)).vectors[:, :4]
        assert numkit.frobenius_norm(numkit.pinv(q) - q.T) <= 1e-10

    def test_zero_matrix(self):
        np.testing.assert_allclose(numkit.pinv(np.zeros((3, 2))), np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        a = np.ones((2, 2))
        a[1, 1] = np.inf
        with pytest.raises(DomainError):
            numkit.pinv(a)


class TestPlumbing:
    def test_matmul_identity(self):
        rng = np.random.default_rng(41)
        a = rng.standard_normal((4, 3))
        np.testing.assert_allclose(numkit.matmul(np.eye(4), a), a)

    def test_matmul_hand_product(self):
        out = numkit.matmul([[1.0, 2.0], [3.0, 4.0]], [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(out, [[2.0, 1.0], [4.0, 3.0]])

    def test_matmul_shape_mismatch(self):
        with pytest.raises(DimensionError):
            numkit.matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_transpose(self):
        a = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_allclose(numkit.transpose(a), [[1.0], [2.0], [3.0]])

    def test_frobenius_norm_zero(self):
        assert numkit.frobenius_norm(np.zeros((4, 5))) == 0.0
