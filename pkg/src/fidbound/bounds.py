"""Fidelity bounds in terms of trace norm and max-relative entropy.

Each inequality is exposed as a function returning the two sides (or the
bound itself) so callers can check them with one-sided tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .constants import DEFAULT_TOL, Tolerances
from .errors import (
    DegenerateLambda0,
    InfiniteLambda0,
    InvalidLambda,
    InvalidState,
    LengthMismatch,
    NegativeInput,
)
from .states import DensityMatrix, ProbDist, check_same_dim


@dataclass(frozen=True)
class BoundReport:
    """The full bound chain for one pair of states."""

    fidelity: float
    trace_norm: float
    s_max: float
    lambda0: float
    fvdg_lower: float
    fvdg_upper: float
    new_lower: float
    gap_new_vs_fvdg: float

    def chain_violations(self, tol: Tolerances = DEFAULT_TOL) -> list[str]:
        """Names of the chain inequalities this report breaks (empty on success)."""
        bad = []
        if self.new_lower < self.fvdg_lower - tol.chain_tol:
            bad.append("fvdg_lower<=new_lower")
        if self.new_lower > self.fidelity + tol.ineq_tol:
            bad.append("new_lower<=fidelity")
        if self.fidelity > self.fvdg_upper + tol.ineq_tol:
            bad.append("fidelity<=fvdg_upper")
        return bad


@dataclass(frozen=True)
class MixtureCase:
    """``rho``, ``sigma`` and the state ``lam * rho + (1 - lam) * sigma``."""

    rho: DensityMatrix
    sigma: DensityMatrix
    lam: float
    mixed: DensityMatrix = field(init=False)

    def __post_init__(self):
        check_same_dim(self.rho, self.sigma)
        _check_lambda(self.lam)
        mixed = self.lam * self.rho.mat + (1.0 - self.lam) * self.sigma.mat
        object.__setattr__(self, "mixed", DensityMatrix(mixed, self.rho.tol))


@dataclass(frozen=True)
class SaturationReport:
    fvdg_lower_saturated: bool
    s_max_infinite: bool
    states_equal: bool
    chain_values: BoundReport

    @property
    def fvdg_slack(self) -> float:
        return self.chain_values.fidelity - self.chain_values.fvdg_lower

    @property
    def implication_holds(self) -> bool:
        """Saturation of the FvG lower bound forces S_max = inf or rho = sigma."""
        return (not self.fvdg_lower_saturated) or self.s_max_infinite or self.states_equal


def _check_lambda(lam: float) -> None:
    if not (0.0 <= lam <= 1.0):
        raise InvalidLambda(f"lambda must lie in [0, 1], got {lam!r}")


def fvdg_from_norm(trace_norm: float) -> tuple[float, float]:
    lower = 1.0 - 0.5 * trace_norm
    upper = math.sqrt(max(1.0 - 0.25 * trace_norm**2, 0.0))
    return lower, upper


def fvdg_bounds(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[float, float]:
    """Fuchs-van de Graaf sandwich ``(1 - T/2, sqrt(1 - T^2/4))`` with ``T = ||rho - sigma||_1``."""
    return fvdg_from_norm(metrics.trace_distance_norm(rho, sigma))


def smax_weight(s_max: float) -> float:
    """``x / (1 + x)`` with ``x = exp(S_max / 2)``; equals its limit 1 at ``S_max = inf``."""
    if math.isinf(s_max):
        return 1.0
    # x/(1+x) = 1/(1+exp(-S/2)), stable for large S.
    return 1.0 / (1.0 + math.exp(-0.5 * s_max))


def new_lower_from(trace_norm: float, s_max: float) -> float:
    return 1.0 - 0.5 * smax_weight(s_max) * trace_norm


def new_lower_bound(rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None) -> float:
    """Lower bound on fidelity using the trace norm and ``S_max(rho || sigma)``.

    Reduces to the Fuchs-van de Graaf lower bound when ``S_max`` is infinite.
    """
    return new_lower_from(
        metrics.trace_distance_norm(rho, sigma), metrics.s_max(rho, sigma, rank_tol)
    )


def lambda0_form(trace_norm: float, lambda0: float) -> float:
    """The same bound written with ``lambda_0``: ``1 - T/2 * sqrt(l0) / (sqrt(l0) + 1)``."""
    if math.isinf(lambda0):
        return 1.0 - 0.5 * trace_norm
    r = math.sqrt(lambda0)
    return 1.0 - 0.5 * (r / (r + 1.0)) * trace_norm


def mixture_bound(case: MixtureCase) -> tuple[float, float]:
    """``(F(rho, mixed), 1 - (1 - sqrt(lam)) T / 2)``; the first is never below the second."""
    lhs = metrics.fidelity(case.rho, case.mixed)
    t = metrics.trace_distance_norm(case.rho, case.sigma)
    rhs = 1.0 - 0.5 * (1.0 - math.sqrt(case.lam)) * t
    return lhs, rhs


def classical_mixture_bound(p: ProbDist, q: ProbDist, lam: float) -> tuple[float, float]:
    """Classical analogue of :func:`mixture_bound` for probability vectors."""
    if len(p) != len(q):
        raise LengthMismatch(f"distributions have lengths {len(p)} and {len(q)}")
    _check_lambda(lam)
    mixed = lam * p.probs + (1.0 - lam) * q.probs
    lhs = float(np.sum(np.sqrt(p.probs * mixed)))
    rhs = 1.0 - 0.5 * (1.0 - math.sqrt(lam)) * float(np.sum(np.abs(p.probs - q.probs)))
    return lhs, rhs


def scalar_mixture_inequality(a: float, lam: float) -> tuple[float, float]:
    """``(sqrt((1+a)(1+lam*a)), 1 + sqrt(lam)*a)`` for ``a, lam >= 0``."""
    if a < 0 or lam < 0:
        raise NegativeInput(f"a and lambda must be nonnegative, got a={a!r}, lambda={lam!r}")
    return math.sqrt((1.0 + a) * (1.0 + lam * a)), 1.0 + math.sqrt(lam) * a


def hat_sigma_decomposition(
    rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None
) -> tuple[float, DensityMatrix]:
    """Split ``sigma = rho / l0 + (1 - 1/l0) * hat_sigma`` with ``l0 = lambda_zero(rho, sigma)``.

    Raises InfiniteLambda0 when rho leaks outside supp(sigma) and
    DegenerateLambda0 when ``l0 <= 1 + deg_tol`` (the split divides by ``1 - 1/l0``).
    """
    check_same_dim(rho, sigma)
    tol = rho.tol
    lam0 = metrics.lambda_zero(rho, sigma, rank_tol)
    if math.isinf(lam0):
        raise InfiniteLambda0("supp(rho) is not contained in supp(sigma)")
    if lam0 <= 1.0 + tol.deg_tol:
        raise DegenerateLambda0(f"lambda_0 = {lam0!r} is within deg_tol of 1")
    inv = 1.0 / lam0
    hat = (sigma.mat - inv * rho.mat) / (1.0 - inv)
    try:
        hat_state = DensityMatrix(hat, tol.replace(psd_tol=tol.hat_psd_tol))
    except InvalidState as exc:
        raise InvalidState(f"residual state is not a density matrix: {exc}") from exc
    return lam0, hat_state


def concavity_comparison(rho: DensityMatrix, sigma: DensityMatrix, lam: float) -> tuple[float, float]:
    """``(1 - (1 - sqrt(lam)) T/2, 1 - (1 - lam) T/2)``: the square-root bound dominates."""
    _check_lambda(lam)
    t = metrics.trace_distance_norm(rho, sigma)
    return 1.0 - 0.5 * (1.0 - math.sqrt(lam)) * t, 1.0 - 0.5 * (1.0 - lam) * t


def bound_report(rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None) -> BoundReport:
    check_same_dim(rho, sigma)
    f = metrics.fidelity(rho, sigma)
    t = metrics.trace_distance_norm(rho, sigma)
    lam0 = metrics.lambda_zero(rho, sigma, rank_tol)
    s = math.inf if math.isinf(lam0) else math.log(lam0)
    lower, upper = fvdg_from_norm(t)
    new = new_lower_from(t, s)
    return BoundReport(
        fidelity=f,
        trace_norm=t,
        s_max=s,
        lambda0=lam0,
        fvdg_lower=lower,
        fvdg_upper=upper,
        new_lower=new,
        gap_new_vs_fvdg=new - lower,
    )


def saturation_from_report(report: BoundReport, sat_tol: float) -> SaturationReport:
    return SaturationReport(
        fvdg_lower_saturated=abs(report.fidelity - report.fvdg_lower) <= sat_tol,
        s_max_infinite=math.isinf(report.s_max),
        states_equal=report.trace_norm <= sat_tol,
        chain_values=report,
    )


def saturation_report(
    rho: DensityMatrix, sigma: DensityMatrix, rank_tol: float | None = None
) -> SaturationReport:
    """Flags for FvG-lower saturation, infinite ``S_max`` and equality of the states.

    ``states_equal`` means ``||rho - sigma||_1 <= sat_tol``. Only the direction
    "saturated implies S_max = inf or equal" is proven; the converse fails in
    general (e.g. ``|+><+|`` against ``|0><0|``) and is reported, never assumed.
    """
    return saturation_from_report(bound_report(rho, sigma, rank_tol), rho.tol.sat_tol)
