"""Fidelity, trace norm, max-relative entropy and the measurements that attain them.

Infinite max-relative entropy is represented by ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import LengthMismatch, UnsupportedDimension
from .states import POVM, DensityMatrix, ProbDist, check_same_dim, induced_distribution


@dataclass(frozen=True)
class MeasurementResult:
    povm: POVM
    achieved: float


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (not squared), clamped to ``[0, 1]``.

    Evaluated as the sum of singular values of ``sqrt(sigma) sqrt(rho)``. The
    squares of those singular values are the eigenvalues of
    ``sqrt(rho) sigma sqrt(rho)``, but taking them from the SVD avoids the
    square-root amplification of rounding in tiny eigenvalues
    (see :func:`fidelity_by_eigenvalues`).
    """
    check_same_dim(rho, sigma)
    prod = linalg.matrix_sqrt(sigma.eig, sigma.tol) @ linalg.matrix_sqrt(rho.eig, rho.tol)
    value = float(np.sum(np.linalg.svd(prod, compute_uv=False)))
    return min(max(value, 0.0), 1.0)


def fidelity_by_eigenvalues(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """The defining formula evaluated literally: eigenvalues of ``sqrt(rho) sigma sqrt(rho)``.

    Accurate only to about the square root of machine precision when either
    state is close to rank-deficient; kept as an independent cross-check.
    """
    check_same_dim(rho, sigma)
    root = linalg.matrix_sqrt(rho.eig, rho.tol)
    inner = root @ sigma.mat @ root
    value = linalg.trace_sqrt(0.5 * (inner + inner.conj().T), rho.tol)
    return min(max(value, 0.0), 1.0)


def trace_distance_norm(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Full trace norm ``||rho - sigma||_1`` (in ``[0, 2]``, not halved)."""
    check_same_dim(rho, sigma)
    diff = rho.mat - sigma.mat
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return min(float(np.sum(np.abs(w))), 2.0)


def support_leak(rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None) -> float:
    """``max |(I - P_sigma) rho (I - P_sigma)|``: how much of rho lies outside supp(sigma)."""
    check_same_dim(rho, sigma)
    comp = np.eye(sigma.dim) - linalg.support_projector(sigma.eig, rank_tol, sigma.tol)
    return linalg.max_abs(comp @ rho.mat @ comp)


def lambda_zero(rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None) -> float:
    """Smallest ``lam`` with ``rho <= lam * sigma``; ``inf`` if supp(rho) is not inside supp(sigma).

    Computed as the largest eigenvalue of ``sigma^{-1/2} rho sigma^{-1/2}`` with
    the pseudo-inverse square root, floored at 1 (unit traces force ``lam >= 1``).
    """
    check_same_dim(rho, sigma)
    if support_leak(rho, sigma, rank_tol) > rho.tol.support_leak_tol:
        return math.inf
    inv_root = linalg.pseudo_inv_sqrt(sigma.eig, rank_tol, sigma.tol)
    x = inv_root @ rho.mat @ inv_root
    lam = float(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[-1])
    return max(lam, 1.0)


def s_max(rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None) -> float:
    """Max-relative entropy ``min{g : rho <= e^g sigma}`` in nats (``inf`` allowed)."""
    lam = lambda_zero(rho, sigma, rank_tol)
    return math.inf if math.isinf(lam) else math.log(lam)


def _check_lengths(p: ProbDist, q: ProbDist) -> None:
    if len(p) != len(q):
        raise LengthMismatch(f"distributions have lengths {len(p)} and {len(q)}")


def classical_fidelity(p: ProbDist, q: ProbDist) -> float:
    _check_lengths(p, q)
    return min(float(np.sum(np.sqrt(p.probs * q.probs))), 1.0)


def classical_l1(p: ProbDist, q: ProbDist) -> float:
    _check_lengths(p, q)
    return min(float(np.sum(np.abs(p.probs - q.probs))), 2.0)


def helstrom_measurement(rho: DensityMatrix, sigma: DensityMatrix) -> MeasurementResult:
    """Two-outcome measurement ``{P+, I - P+}`` maximizing the outcome l1 distance.

    ``P+`` projects onto the nonnegative eigenspace of ``rho - sigma``.
    """
    d = check_same_dim(rho, sigma)
    diff = rho.mat - sigma.mat
    w, v = np.linalg.eigh(0.5 * (diff + diff.conj().T))
    pos = v[:, w >= 0]
    p_plus = pos @ pos.conj().T
    povm = POVM((p_plus, np.eye(d) - p_plus), rho.tol)
    achieved = classical_l1(induced_distribution(rho, povm), induced_distribution(sigma, povm))
    return MeasurementResult(povm, achieved)


def _basis_povm(vectors: np.ndarray, complement: np.ndarray | None, tol) -> POVM:
    elems = [np.outer(vectors[:, j], vectors[:, j].conj()) for j in range(vectors.shape[1])]
    if complement is not None:
        elems.append(complement)
    return POVM(tuple(elems), tol)


def _fuchs_caves_povm(rho: DensityMatrix, sigma: DensityMatrix, rank_tol) -> POVM:
    # Eigenbasis of M = sigma^{-1/2} (sigma^{1/2} rho sigma^{1/2})^{1/2} sigma^{-1/2},
    # restricted to supp(sigma); M sigma M = rho there.
    tol = sigma.tol
    basis = linalg.support_basis(sigma.eig, rank_tol, tol)
    vals = sigma.eig.values[: basis.shape[1]]
    # In the eigenbasis of sigma restricted to its support everything is invertible.
    root = np.sqrt(vals)
    rho_s = basis.conj().T @ rho.mat @ basis
    inner = root[:, None] * rho_s * root[None, :]
    middle = linalg.matrix_sqrt(0.5 * (inner + inner.conj().T), tol)
    m = middle / root[:, None] / root[None, :]
    _, w = np.linalg.eigh(0.5 * (m + m.conj().T))
    vectors = basis @ w
    r = basis.shape[1]
    complement = None
    if r < sigma.dim:
        complement = np.eye(sigma.dim) - basis @ basis.conj().T
    return _basis_povm(vectors, complement, tol)


def _povm_fidelity(rho: DensityMatrix, sigma: DensityMatrix, povm: POVM) -> float:
    return classical_fidelity(induced_distribution(rho, povm), induced_distribution(sigma, povm))


def fuchs_caves_measurement(
    rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None
) -> MeasurementResult:
    """Projective measurement whose outcome distributions have classical fidelity ``F(rho, sigma)``.

    Exact when one support contains the other. Otherwise the construction is
    applied to ``sigma`` mixed with a little of the maximally mixed state (for a
    few mixing weights) and, for qubits, a 200-point grid search is also tried;
    the measurement with the smallest classical fidelity wins.
    """
    d = check_same_dim(rho, sigma)
    tol = rho.tol
    if support_leak(rho, sigma, rank_tol) <= tol.support_leak_tol:
        povm = _fuchs_caves_povm(rho, sigma, rank_tol)
        return MeasurementResult(povm, _povm_fidelity(rho, sigma, povm))
    if support_leak(sigma, rho, rank_tol) <= tol.support_leak_tol:
        povm = _fuchs_caves_povm(sigma, rho, rank_tol)
        return MeasurementResult(povm, _povm_fidelity(rho, sigma, povm))

    candidates = []
    for eps in (1e-4, 1e-6, 1e-8):
        mixed = DensityMatrix((1.0 - eps) * sigma.mat + eps * np.eye(d) / d, tol)
        povm = _fuchs_caves_povm(rho, mixed, rank_tol)
        candidates.append(MeasurementResult(povm, _povm_fidelity(rho, sigma, povm)))
    if d == 2:
        grid = _qubit_grid_search(rho, sigma, 200)
        candidates.append(MeasurementResult(grid.povm_min_fid, grid.min_fid))
    return min(candidates, key=lambda r: r.achieved)


# --------------------------------------------------------------------------
# Brute-force oracle over projective qubit measurements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _GridResult:
    max_l1: float
    min_fid: float
    povm_min_fid: POVM


def _qubit_grid_search(rho: DensityMatrix, sigma: DensityMatrix, resolution: int) -> _GridResult:
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    # |n> = (cos(th/2), e^{i ph} sin(th/2)); the complementary outcome is I - |n><n|.
    a = np.cos(th / 2)
    b = np.exp(1j * ph) * np.sin(th / 2)

    def outcome(mat):
        p = (
            a * a * mat[0, 0].real
            + (b * b.conj()).real * mat[1, 1].real
            + 2.0 * (a * b * mat[0, 1]).real
        )
        return np.clip(p, 0.0, 1.0)

    p = outcome(rho.mat)
    q = outcome(sigma.mat)
    l1 = 2.0 * np.abs(p - q)
    fid = np.sqrt(p * q) + np.sqrt((1.0 - p) * (1.0 - q))
    k = np.unravel_index(np.argmin(fid), fid.shape)
    n = np.array([a[k], b[k]])
    proj = np.outer(n, n.conj())
    povm = POVM((proj, np.eye(2) - proj), rho.tol)
    return _GridResult(float(l1.max()), float(fid.min()), povm)


def brute_force_povm_extrema(
    rho: DensityMatrix, sigma: DensityMatrix, grid_resolution: int = 200
) -> tuple[float, float]:
    """Grid search over projective qubit measurements.

    Returns ``(max_l1, min_fid)``: the largest outcome l1 distance and the smallest
    outcome classical fidelity over a ``grid_resolution`` x ``grid_resolution``
    grid of Bloch directions. Only qubits are supported.
    """
    d = check_same_dim(rho, sigma)
    if d != 2:
        raise UnsupportedDimension(f"brute-force oracle supports d=2 only, got d={d}")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    res = _qubit_grid_search(rho, sigma, int(grid_resolution))
    return res.max_l1, res.min_fid
