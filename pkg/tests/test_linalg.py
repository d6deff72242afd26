import numpy as np
import pytest

from xldetect.linalg import svd_small


def check_factorization(m, u, s, v, tol=1e-8):
    m = np.asarray(m, dtype=np.float64)
    k = min(m.shape)
    resid = np.linalg.norm(u @ np.diag(s) @ v.T - m)
    assert resid <= tol * max(1.0, np.linalg.norm(m))
    assert np.abs(u.T @ u - np.eye(k)).max() <= tol
    assert np.abs(v.T @ v - np.eye(k)).max() <= tol
    assert (s >= 0).all()
    assert (np.diff(s) <= 1e-12).all()


class TestSvdSmall:
    def test_identity(self):
        u, s, v = svd_small(np.eye(4))
        assert np.allclose(s, 1.0)
        assert np.abs(u @ v.T - np.eye(4)).max() <= 1e-12

    def test_diagonal(self):
        u, s, v = svd_small(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(s, [3.0, 2.0, 1.0])

    def test_against_gram_eigendecomposition(self):
        # oracle: singular values are square roots of eigenvalues of M'M
        rng = np.random.default_rng(42)
        m = rng.standard_normal((5, 5))
        u, s, v = svd_small(m)
        check_factorization(m, u, s, v)
        eig = np.sqrt(np.maximum(np.linalg.eigvalsh(m.T @ m), 0.0))[::-1]
        assert np.abs(s - eig).max() <= 1e-10

    def test_against_numpy_svd_values(self):
        rng = np.random.default_rng(7)
        for d in (2, 3, 10, 31):
            m = rng.standard_normal((d, d)) * rng.uniform(0.1, 10)
            u, s, v = svd_small(m)
            check_factorization(m, u, s, v)
            assert np.abs(s - np.linalg.svd(m, compute_uv=False)).max() <= 1e-9 * max(
                1.0, s[0]
            )

    def test_rank_deficient(self):
        m = np.zeros((6, 6))
        m[0, 0] = 5.0
        m[1, 1] = 1e-18  # below any reasonable cutoff
        u, s, v = svd_small(m)
        check_factorization(np.where(np.abs(m) > 1e-17, m, 0.0), u, s, v)
        assert s[0] == pytest.approx(5.0)
        assert (s[1:] == 0.0).all()

    def test_zero_matrix(self):
        u, s, v = svd_small(np.zeros((3, 3)))
        assert (s == 0).all()
        assert np.abs(u.T @ u - np.eye(3)).max() <= 1e-12

    def test_rectangular_both_orientations(self):
        rng = np.random.default_rng(3)
        for shape in ((8, 3), (3, 8), (10, 10)):
            m = rng.standard_normal(shape)
            u, s, v = svd_small(m)
            check_factorization(m, u, s, v)
            assert u.shape == (shape[0], min(shape))
            assert v.shape == (shape[1], min(shape))

    def test_tiny_and_huge_scales(self):
        rng = np.random.default_rng(9)
        for scale in (1e-12, 1e12):
            m = rng.standard_normal((6, 6)) * scale
            u, s, v = svd_small(m)
            check_factorization(m, u, s, v)

    def test_non_finite_rejected(self):
        m = np.eye(3)
        m[1, 1] = np.nan
        with pytest.raises(ValueError):
            svd_small(m)

    def test_one_by_one(self):
        u, s, v = svd_small([[-2.0]])
        assert s[0] == 2.0
        assert np.allclose(u @ np.diag(s) @ v.T, [[-2.0]])
