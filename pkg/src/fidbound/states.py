"""Quantum and classical states, POVMs, random ensembles and the state-file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .constants import DEFAULT_TOL, Tolerances
from .errors import DimensionMismatch, InvalidSpec, InvalidState, NotHermitian, NotPSD, NotUnitary

ENSEMBLE_KINDS = ("pure_haar", "hilbert_schmidt", "bures", "rank_deficient")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix.

    The matrix is validated and symmetrized on construction; the eigendecomposition
    computed for validation is kept in :attr:`eig` and reused downstream.
    """

    mat: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    eig: linalg.EigenDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        try:
            herm = linalg.check_hermitian(self.mat, self.tol)
        except NotHermitian as exc:
            raise InvalidState(f"not Hermitian: {exc}") from exc
        except ValueError as exc:
            raise InvalidState(str(exc)) from exc
        if not np.all(np.isfinite(herm)):
            raise InvalidState("matrix has non-finite entries")
        w, v = np.linalg.eigh(herm)
        dec = linalg.EigenDecomposition(np.ascontiguousarray(w[::-1]), np.ascontiguousarray(v[:, ::-1]))
        if dec.values[-1] < -self.tol.psd_tol:
            raise InvalidState(
                f"not positive semi-definite: min eigenvalue {dec.values[-1]:.3e} < -{self.tol.psd_tol:g}"
            )
        trace = float(np.trace(herm).real)
        if abs(trace - 1.0) > self.tol.trace_tol:
            raise InvalidState(f"trace {trace!r} differs from 1 by more than {self.tol.trace_tol:g}")
        object.__setattr__(self, "mat", _frozen(herm))
        object.__setattr__(self, "eig", dec)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.values

    def rank(self, rank_tol: float | None = None) -> int:
        return linalg.support_basis(self.eig, rank_tol, self.tol).shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    @classmethod
    def pure(cls, psi: Sequence[complex], tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        """``|psi><psi|`` for a (not necessarily normalized) vector."""
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), tol)

    @classmethod
    def diagonal(cls, probs: Sequence[float], tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=complex)), tol)

    @classmethod
    def maximally_mixed(cls, dim: int, tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim, tol)


def as_density(x, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else DensityMatrix(np.asarray(x), tol)


def check_same_dim(*states: DensityMatrix) -> int:
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimensionMismatch(f"states have different dimensions {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True, eq=False)
class ProbDist:
    """Finite probability vector; entries in ``[-prob_clamp_tol, 0]`` are clamped to 0."""

    probs: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvalidState("empty probability vector")
        if not np.all(np.isfinite(p)):
            raise InvalidState("probability vector has non-finite entries")
        if p.min() < -self.tol.prob_clamp_tol:
            raise InvalidState(f"negative probability {p.min():.3e}")
        p = np.clip(p, 0.0, 1.0)
        if abs(p.sum() - 1.0) > self.tol.trace_tol:
            raise InvalidState(f"probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "probs", _frozen(p))

    def __len__(self) -> int:
        return self.probs.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)


@dataclass(frozen=True, eq=False)
class POVM:
    elements: tuple
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        elems = [linalg.as_matrix(m) for m in self.elements]
        if not elems:
            raise InvalidState("POVM needs at least one element")
        d = elems[0].shape[0]
        if any(m.shape != (d, d) for m in elems):
            raise DimensionMismatch("POVM elements have different dimensions")
        clean = []
        for j, m in enumerate(elems):
            dec = linalg.eigh(m, self.tol)
            if dec.values[-1] < -self.tol.psd_tol:
                raise NotPSD(f"POVM element {j} has eigenvalue {dec.values[-1]:.3e}")
            clean.append(_frozen(0.5 * (m + m.conj().T)))
        defect = linalg.max_abs(sum(clean) - np.eye(d))
        if defect > self.tol.povm_tol:
            raise InvalidState(f"POVM elements sum to identity only within {defect:.3e}")
        object.__setattr__(self, "elements", tuple(clean))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)


def projective_povm(basis, tol: Tolerances = DEFAULT_TOL) -> POVM:
    """Rank-one projectors onto the columns of a unitary matrix."""
    u = linalg.as_matrix(basis)
    defect = linalg.max_abs(u.conj().T @ u - np.eye(u.shape[0]))
    if defect > tol.povm_tol:
        raise NotUnitary(f"basis columns are orthonormal only within {defect:.3e}")
    return POVM(tuple(np.outer(u[:, j], u[:, j].conj()) for j in range(u.shape[1])), tol)


def induced_distribution(rho: DensityMatrix, m: POVM) -> ProbDist:
    """Born-rule outcome distribution ``p_j = Tr(M_j rho)``."""
    if rho.dim != m.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} != POVM dimension {m.dim}")
    # Tr(M rho) = sum_ij M_ij rho_ji
    probs = np.array([np.sum(e * rho.mat.T).real for e in m.elements])
    if probs.min() < -rho.tol.prob_clamp_tol:
        raise InvalidState(f"Born rule produced probability {probs.min():.3e}")
    return ProbDist(np.clip(probs, 0.0, 1.0), rho.tol)


# --------------------------------------------------------------------------
# Random ensembles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleSpec:
    """Random state ensemble.

    ``rank`` is only used by ``rank_deficient`` and defaults to ``ceil(dim / 2)``.
    Every rank-deficient sample of one spec lives on the same ``rank``-dimensional
    subspace, which is itself random (drawn from ``seed`` alone).
    """

    kind: str
    dim: int
    seed: int
    rank: int | None = None

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise InvalidSpec(f"unknown ensemble kind {self.kind!r}; expected one of {ENSEMBLE_KINDS}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidSpec(f"dim must be a positive integer, got {self.dim!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.kind == "rank_deficient":
            k = self.effective_rank
            if not 1 <= k <= self.dim:
                raise InvalidSpec(f"rank_deficient rank must lie in [1, {self.dim}], got {k}")
        elif self.rank is not None:
            raise InvalidSpec(f"rank only applies to rank_deficient, not {self.kind!r}")

    @property
    def effective_rank(self) -> int:
        return self.rank if self.rank is not None else max(1, math.ceil(self.dim / 2))

    @property
    def label(self) -> str:
        if self.kind == "rank_deficient":
            return f"rank_deficient({self.effective_rank})"
        return self.kind


def substream(*keys: int) -> np.random.Generator:
    """PCG64 generator whose seed is the SeedSequence hash of ``keys``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in keys])))


def derive_seed(*keys: int) -> int:
    """64-bit seed hashed from integer keys (used to give each campaign cell its own stream)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normal samples (E|z|^2 = 1) via the Box-Muller transform."""
    n = int(np.prod(shape))
    u1 = 1.0 - rng.random(n)  # (0, 1]
    u2 = rng.random(n)
    radius = np.sqrt(-np.log(u1))  # |z|^2 ~ Exp(1)
    angle = 2.0 * np.pi * u2
    return (radius * np.exp(1j * angle)).reshape(shape)


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(complex_gaussian(rng, (dim, dim)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def _normalized_gram(g: np.ndarray) -> np.ndarray:
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


def sample_state(spec: EnsembleSpec, index: int, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Deterministic sample number ``index`` of the ensemble ``spec``.

    The stream for a sample is ``PCG64(SeedSequence([spec.seed, index]))``, so
    results do not depend on the order in which samples are drawn.
    """
    if index < 0:
        raise InvalidSpec(f"index must be nonnegative, got {index}")
    d = spec.dim
    if d == 1:
        return DensityMatrix(np.ones((1, 1), dtype=complex), tol)
    rng = substream(spec.seed, index)
    if spec.kind == "pure_haar":
        v = complex_gaussian(rng, (d,))
        v /= np.linalg.norm(v)
        mat = np.outer(v, v.conj())
    elif spec.kind == "hilbert_schmidt":
        mat = _normalized_gram(complex_gaussian(rng, (d, d)))
    elif spec.kind == "bures":
        u = haar_unitary(rng, d)
        mat = _normalized_gram((np.eye(d) + u) @ complex_gaussian(rng, (d, d)))
    else:
        k = spec.effective_rank
        isometry = haar_unitary(substream(spec.seed), d)[:, :k]
        inner = _normalized_gram(complex_gaussian(rng, (k, k)))
        mat = isometry @ inner @ isometry.conj().T
        mat = 0.5 * (mat + mat.conj().T)
        mat /= np.trace(mat).real
    return DensityMatrix(mat, tol)


def sample_pair(
    spec: EnsembleSpec, trial: int, tol: Tolerances = DEFAULT_TOL
) -> tuple[DensityMatrix, DensityMatrix]:
    """The (rho, sigma) pair for campaign trial ``trial``: samples ``2*trial`` and ``2*trial + 1``."""
    return sample_state(spec, 2 * trial, tol), sample_state(spec, 2 * trial + 1, tol)


def sample_distribution(rng: np.random.Generator, n: int) -> ProbDist:
    """Flat-Dirichlet random distribution of length ``n``, optionally with exact zeros."""
    x = -np.log(1.0 - rng.random(n))
    if n > 1 and rng.random() < 0.25:
        x[rng.random(n) < 0.3] = 0.0
        if not x.any():
            x[rng.integers(n)] = 1.0
    return ProbDist(x / x.sum())


# --------------------------------------------------------------------------
# State file format: {"dim": d, "matrix": [[[re, im], ...], ...]}
# --------------------------------------------------------------------------


def state_to_payload(rho: DensityMatrix | np.ndarray) -> dict:
    m = np.asarray(rho.mat if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def state_from_payload(payload, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Parse and validate a state-file payload. Raises InvalidState on any defect."""
    if not isinstance(payload, dict):
        raise InvalidState("state file must contain a JSON object")
    if "dim" not in payload or "matrix" not in payload:
        raise InvalidState("state file needs 'dim' and 'matrix' keys")
    d = payload["dim"]
    rows = payload["matrix"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise InvalidState(f"'dim' must be a positive integer, got {d!r}")
    if not isinstance(rows, list) or len(rows) != d:
        raise InvalidState(f"'matrix' must have {d} rows")
    m = np.empty((d, d), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != d:
            raise InvalidState(f"row {i} must have {d} entries")
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise InvalidState(f"entry ({i},{j}) must be a [re, im] pair of numbers")
            m[i, j] = complex(entry[0], entry[1])
    if not np.all(np.isfinite(m)):
        raise InvalidState("matrix has non-finite entries")
    return DensityMatrix(m, tol)


def dump_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(state_to_payload(rho)) + "\n")


def load_state(path, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidState(f"malformed JSON in {path}: {exc}") from exc
    return state_from_payload(payload, tol)


def states_from_payloads(payloads: Iterable[dict]) -> list[DensityMatrix]:
    return [state_from_payload(p) for p in payloads]
