import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidbound import linalg
from fidbound.constants import DEFAULT_TOL
from fidbound.errors import NoConvergence, NotHermitian, NotPSD

from .conftest import random_hermitian, random_psd

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=16)


def charpoly_roots(a):
    """Eigenvalues as roots of det(xI - A); independent of any eigensolver."""
    return np.sort(np.roots(np.poly(a)).real)[::-1]


class TestEigh:
    def test_diagonal_sorted_descending(self):
        dec = linalg.eigh(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(dec.values, [3, 2, 1])
        # Eigenvectors are the coordinate axes (up to phase).
        np.testing.assert_allclose(np.abs(dec.vectors), np.eye(3)[:, [0, 2, 1]], atol=1e-14)

    def test_pauli_x(self):
        a = np.array([[0, 1], [1, 0]], dtype=complex)
        expected = charpoly_roots(a)
        np.testing.assert_allclose(expected, [1, -1], atol=1e-12)
        np.testing.assert_allclose(linalg.eigh(a).values, expected, atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(linalg.eigh(np.eye(5)).values, np.ones(5))

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            linalg.eigh(np.array([[0, 1], [0, 0]], dtype=complex))

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_matches_characteristic_polynomial(self, method):
        rng = np.random.default_rng(3)
        a = random_hermitian(rng, 5)
        np.testing.assert_allclose(linalg.eigh(a, method=method).values, charpoly_roots(a), atol=1e-9)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            linalg.eigh(np.eye(2), method="qr")

    def test_jacobi_sweep_budget(self):
        rng = np.random.default_rng(0)
        with pytest.raises(NoConvergence):
            linalg.jacobi_eigh(random_hermitian(rng, 12), max_sweeps=1)

    @settings(max_examples=60, deadline=None)
    @given(seed=seeds, d=dims)
    def test_reconstruction(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_hermitian(rng, d, scale=rng.uniform(0.01, 10))
        dec = linalg.eigh(a)
        scale = max(1.0, linalg.max_abs(a))
        assert linalg.max_abs(dec.reconstruct() - a) <= 1e-9 * scale
        assert linalg.max_abs(dec.vectors.conj().T @ dec.vectors - np.eye(d)) <= 1e-9
        assert np.all(np.diff(dec.values) <= 0)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, d=st.integers(min_value=1, max_value=10))
    def test_jacobi_agrees_with_lapack(self, seed, d):
        a = random_hermitian(np.random.default_rng(seed), d)
        jac = linalg.eigh(a, method="jacobi")
        lap = linalg.eigh(a)
        np.testing.assert_allclose(jac.values, lap.values, atol=1e-10)
        assert linalg.max_abs(jac.reconstruct() - a) <= 1e-9 * max(1.0, linalg.max_abs(a))
        assert linalg.max_abs(jac.vectors.conj().T @ jac.vectors - np.eye(d)) <= 1e-9


class TestMatrixSqrt:
    def test_diagonal(self):
        np.testing.assert_allclose(linalg.matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(linalg.matrix_sqrt(np.eye(3)), np.eye(3), atol=1e-14)

    def test_two_by_two(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        # Eigenvalues 3 and 1 on (1,1)/sqrt2 and (1,-1)/sqrt2.
        hi, lo = np.sqrt(3.0), 1.0
        expected = 0.5 * np.array([[hi + lo, hi - lo], [hi - lo, hi + lo]])
        s = linalg.matrix_sqrt(a)
        np.testing.assert_allclose(s, expected, atol=1e-12)
        np.testing.assert_allclose(s, [[1.366025, 0.366025], [0.366025, 1.366025]], atol=1e-6)
        assert linalg.max_abs(s @ s - a) <= DEFAULT_TOL.fn_tol

    def test_clamps_rounding_negatives(self):
        a = np.diag([1.0, -0.5e-10])
        np.testing.assert_allclose(linalg.matrix_sqrt(a), np.diag([1.0, 0.0]))

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            linalg.matrix_sqrt(np.diag([1.0, -1e-6]))

    @settings(max_examples=60, deadline=None)
    @given(seed=seeds, d=dims)
    def test_square_recovers_matrix(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_psd(rng, d, rank=int(rng.integers(1, d + 1)))
        s = linalg.matrix_sqrt(a)
        assert linalg.max_abs(s - s.conj().T) <= 1e-12
        assert np.linalg.eigvalsh(s).min() >= -1e-12
        assert linalg.max_abs(s @ s - a) <= 1e-9

    def test_basis_independent_on_degenerate_spectrum(self):
        rng = np.random.default_rng(11)
        u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        a = u @ np.diag([0.4, 0.4, 0.2, 0.0]) @ u.conj().T
        # Same operator built from a rotated basis of the degenerate eigenspace.
        r = np.eye(4, dtype=complex)
        r[:2, :2] = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
        v = u @ r
        dec = linalg.EigenDecomposition(np.array([0.4, 0.4, 0.2, 0.0]), v)
        np.testing.assert_allclose(linalg.matrix_sqrt(dec), linalg.matrix_sqrt(a), atol=1e-12)
        np.testing.assert_allclose(linalg.support_projector(dec), linalg.support_projector(a), atol=1e-12)
        np.testing.assert_allclose(linalg.pseudo_inv_sqrt(dec), linalg.pseudo_inv_sqrt(a), atol=1e-10)


class TestSupport:
    def test_diagonal_rank(self):
        np.testing.assert_allclose(linalg.support_projector(np.diag([0.5, 0.5, 0.0])), np.diag([1.0, 1.0, 0.0]))

    def test_zero_matrix(self):
        np.testing.assert_allclose(linalg.support_projector(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_rank_one_plus(self):
        plus = np.full((2, 2), 0.5)
        np.testing.assert_allclose(linalg.support_projector(plus), [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            linalg.support_projector(np.diag([1.0, -0.1]))

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, d=dims)
    def test_idempotent_and_commuting(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_psd(rng, d, rank=int(rng.integers(1, d + 1)))
        p = linalg.support_projector(a)
        assert linalg.max_abs(p @ p - p) <= 1e-9
        assert linalg.max_abs(p - p.conj().T) <= 1e-9
        assert linalg.max_abs(p @ a - a @ p) <= 1e-9


class TestPseudoInvSqrt:
    def test_diagonal(self):
        np.testing.assert_allclose(linalg.pseudo_inv_sqrt(np.diag([4.0, 0.0])), np.diag([0.5, 0.0]))

    def test_identity(self):
        np.testing.assert_allclose(linalg.pseudo_inv_sqrt(np.eye(2)), np.eye(2))

    def test_threshold(self):
        out = linalg.pseudo_inv_sqrt(np.diag([0.25, 1e-30]), rank_tol=1e-12)
        np.testing.assert_allclose(out, np.diag([2.0, 0.0]))

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            linalg.pseudo_inv_sqrt(np.diag([1.0, -0.1]))

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, d=dims)
    def test_sandwich_gives_support_projector(self, seed, d):
        rng = np.random.default_rng(seed)
        a = random_psd(rng, d, rank=int(rng.integers(1, d + 1)))
        b = linalg.pseudo_inv_sqrt(a)
        assert linalg.max_abs(b - b.conj().T) <= 1e-9
        assert linalg.max_abs(b @ a @ b - linalg.support_projector(a)) <= 1e-8
