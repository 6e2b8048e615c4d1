"""Central tolerance table.

Every numerical threshold used by the library lives here exactly once.
Functions take a :class:`Tolerances` instance (defaulting to
:data:`DEFAULT_TOL`) so callers can run sensitivity studies without any
global mutable state.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping


@dataclass(frozen=True)
class Tolerances:
    # Hermiticity check, max |A - A^H| entrywise.
    herm_tol: float = 1e-10
    # Eigenvalues in [-psd_tol, 0] are rounding; below that the matrix is not PSD.
    psd_tol: float = 1e-10
    # |Tr(rho) - 1| for density matrices and |sum(p) - 1| for distributions.
    trace_tol: float = 1e-10
    # Accuracy promised by operator functions (sqrt, projectors).
    fn_tol: float = 1e-8
    # Relative eigenvalue cutoff defining the numerical support.
    rank_tol: float = 1e-10
    # Eigendecomposition reconstruction / orthonormality tolerance.
    recon_tol: float = 1e-9
    # Entry of (I-P_sigma) rho (I-P_sigma) above which S_max is +inf.
    support_leak_tol: float = 1e-9
    # Probabilities in [-prob_clamp_tol, 0] clamp to 0; below raises.
    prob_clamp_tol: float = 1e-12
    # POVM completeness, max |sum M_j - I|; also unitarity checks.
    povm_tol: float = 1e-9
    # lambda_0 <= 1 + deg_tol makes the sigma-hat decomposition undefined.
    deg_tol: float = 1e-9
    # Absolute tolerance deciding FvG-lower saturation.
    sat_tol: float = 1e-8
    # PSD tolerance for the residual state sigma-hat.
    hat_psd_tol: float = 1e-7
    # Eigenvalues within noise_rel * d * max|lambda| of zero are rounding
    # noise and are treated as exact zeros by operator functions.
    noise_rel: float = 2.220446049250313e-16
    # One-sided campaign checks: fidelity-side inequalities (new lower bound,
    # FvG upper, mixture bound) and the bound chain's lower link.
    ineq_tol: float = 1e-8
    chain_tol: float = 1e-12
    # Agreement of the two algebraic forms of the new bound.
    form_tol: float = 1e-10
    # Measurement attainment: Helstrom (trace norm) and Fuchs-Caves (fidelity).
    helstrom_tol: float = 1e-8
    fuchs_caves_tol: float = 1e-7
    # Brute-force grid oracle soundness (never beats the quantum optimum).
    oracle_tol: float = 1e-9
    # Jacobi eigensolver: sweep budget and relative off-diagonal threshold.
    jacobi_max_sweeps: int = 100
    jacobi_rel_tol: float = 1e-13

    def replace(self, **overrides: Any) -> "Tolerances":
        return dataclasses.replace(self, **overrides)

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, Any] | None) -> "Tolerances":
        """Build a table from ``DEFAULT_TOL`` plus named overrides.

        Unknown names raise ``KeyError`` so typos in config files fail loudly.
        """
        if not overrides:
            return DEFAULT_TOL
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        clean = {}
        for key, value in overrides.items():
            if key not in known:
                raise KeyError(f"unknown tolerance {key!r}")
            clean[key] = int(value) if key == "jacobi_max_sweeps" else float(value)
            if not math.isfinite(clean[key]) or clean[key] < 0:
                raise ValueError(f"tolerance {key!r} must be finite and nonnegative, got {value!r}")
        return dataclasses.replace(DEFAULT_TOL, **clean)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


DEFAULT_TOL = Tolerances()
