"""Dense Hermitian linear algebra: eigendecomposition and operator functions.

Matrices are plain ``numpy`` complex arrays. The operator functions accept
either an array or a precomputed :class:`EigenDecomposition`, so a state's
spectrum is computed once and reused by every metric that needs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .constants import DEFAULT_TOL, Tolerances
from .errors import NoConvergence, NotHermitian, NotPSD

ComplexMatrix = np.ndarray


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition ``A = V diag(values) V^H``, values descending."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def max_value(self) -> float:
        return float(self.values[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def apply(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Functional calculus: ``V diag(fn(values)) V^H``."""
        return (self.vectors * fn(self.values)) @ self.vectors.conj().T


MatrixLike = Union[np.ndarray, EigenDecomposition]


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def check_hermitian(a: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Return the Hermitian part of ``a`` after checking it is Hermitian within ``herm_tol``."""
    a = as_matrix(a)
    defect = hermitian_defect(a)
    if defect > tol.herm_tol:
        raise NotHermitian(f"max |A - A^H| = {defect:.3e} exceeds herm_tol={tol.herm_tol:g}")
    return 0.5 * (a + a.conj().T)


def eigh(a, tol: Tolerances = DEFAULT_TOL, method: str = "lapack") -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix with descending eigenvalues.

    ``method="lapack"`` uses numpy's divide-and-conquer driver;
    ``method="jacobi"`` uses :func:`jacobi_eigh`, which depends on nothing
    but elementwise arithmetic and serves as an independent cross-check.
    """
    h = check_hermitian(a, tol)
    if method == "lapack":
        w, v = np.linalg.eigh(h)
        w, v = w[::-1], v[:, ::-1]
    elif method == "jacobi":
        w, v = jacobi_eigh(h, max_sweeps=tol.jacobi_max_sweeps, rel_tol=tol.jacobi_rel_tol)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return EigenDecomposition(np.ascontiguousarray(w), np.ascontiguousarray(v))


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 100, rel_tol: float = 1e-13):
    """Cyclic complex Jacobi eigensolver for Hermitian ``a``.

    Each rotation removes a phase from ``a[p, q]`` and then applies the real
    symmetric Jacobi rotation to the resulting 2x2 block. Sweeps stop once the
    off-diagonal Frobenius norm drops below ``rel_tol * ||a||_F``.

    Returns ``(values, vectors)`` with values sorted descending.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = rel_tol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b == 0.0:
                    continue
                phase = apq / b
                zeta = (a[q, q].real - a[p, p].real) / (2.0 * b)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ g
                a[cols, :] = g.conj().T @ a[cols, :]
                a[q, p] = a[p, q] = 0.0
                v[:, cols] = v[:, cols] @ g
    else:
        off = _off_norm(a)
        if off > threshold:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], v[:, order]


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _decompose(a: MatrixLike, tol: Tolerances) -> EigenDecomposition:
    if isinstance(a, EigenDecomposition):
        return a
    return eigh(a, tol)


def _noise_floor(dec: EigenDecomposition, tol: Tolerances) -> float:
    scale = float(np.max(np.abs(dec.values)))
    return tol.noise_rel * dec.dim * scale


def psd_values(a: MatrixLike, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Eigenvalues of a PSD matrix with rounding-level values set to zero.

    Raises NotPSD when an eigenvalue is below ``-psd_tol``.
    """
    dec = _decompose(a, tol)
    w = dec.values
    if w[-1] < -tol.psd_tol:
        raise NotPSD(f"eigenvalue {w[-1]:.3e} < -psd_tol={tol.psd_tol:g}")
    return np.where(w > _noise_floor(dec, tol), w, 0.0)


def matrix_sqrt(a: MatrixLike, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix."""
    dec = _decompose(a, tol)
    w = psd_values(dec, tol)
    return (dec.vectors * np.sqrt(w)) @ dec.vectors.conj().T


def trace_sqrt(a: MatrixLike, tol: Tolerances = DEFAULT_TOL) -> float:
    """``Tr sqrt(A)`` for PSD ``A``."""
    return float(np.sum(np.sqrt(psd_values(_decompose(a, tol), tol))))


def _support_mask(dec: EigenDecomposition, rank_tol: float, tol: Tolerances) -> np.ndarray:
    w = dec.values
    if w[-1] < -tol.psd_tol:
        raise NotPSD(f"eigenvalue {w[-1]:.3e} < -psd_tol={tol.psd_tol:g}")
    lmax = w[0]
    if lmax <= rank_tol:
        return np.zeros(w.shape, dtype=bool)
    return w > rank_tol * lmax


def support_basis(a: MatrixLike, rank_tol: float | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the numerical support (d x r)."""
    dec = _decompose(a, tol)
    rank_tol = tol.rank_tol if rank_tol is None else rank_tol
    return dec.vectors[:, _support_mask(dec, rank_tol, tol)]


def support_projector(a: MatrixLike, rank_tol: float | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Projector onto eigenvectors with eigenvalue above ``rank_tol * lambda_max``.

    Returns the zero matrix when ``lambda_max <= rank_tol``.
    """
    basis = support_basis(a, rank_tol, tol)
    return basis @ basis.conj().T


def pseudo_inv_sqrt(a: MatrixLike, rank_tol: float | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``A^{-1/2}`` on the support of ``A``, zero on its complement."""
    dec = _decompose(a, tol)
    rank_tol = tol.rank_tol if rank_tol is None else rank_tol
    mask = _support_mask(dec, rank_tol, tol)
    inv = np.zeros_like(dec.values)
    inv[mask] = 1.0 / np.sqrt(dec.values[mask])
    return (dec.vectors * inv) @ dec.vectors.conj().T


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))
