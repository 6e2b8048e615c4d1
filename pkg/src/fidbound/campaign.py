"""Seeded randomized verification campaigns.

A campaign runs ``trials_per_cell`` random pairs for every (dim, ensemble)
cell and checks each inequality on them with one-sided tolerances. Trial
``t`` of a cell always uses the same states: the cell seed is hashed from
``(seed, dim, ensemble)`` and the pair from ``(cell seed, t)``, so the result
does not depend on how many worker processes share the work.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from . import __version__, bounds, metrics
from .constants import Tolerances
from .errors import FidboundError, InvalidSpec
from .states import ENSEMBLE_KINDS, DensityMatrix, EnsembleSpec, derive_seed, sample_pair, state_to_payload

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))

CSV_COLUMNS = (
    "dim",
    "ensemble",
    "trial",
    "fidelity",
    "trace_norm",
    "s_max",
    "lambda0",
    "fvdg_lower",
    "fvdg_upper",
    "new_lower",
    "gap_new_vs_fvdg",
    "fvdg_saturated",
)

# Inequality name -> description.
CHECKS = {
    "new_lower<=fidelity": "new lower bound never exceeds the fidelity",
    "fvdg_lower<=new_lower": "new lower bound is at least the Fuchs-van de Graaf lower bound",
    "fidelity<=fvdg_upper": "fidelity never exceeds the Fuchs-van de Graaf upper bound",
    "lambda0_form": "S_max form and lambda_0 form of the bound agree",
    "mixture": "F(rho, lam rho + (1-lam) sigma) >= 1 - (1 - sqrt(lam)) T/2",
    "helstrom_attainment": "Helstrom measurement attains the trace norm",
    "fuchs_caves_attainment": "Fuchs-Caves measurement attains the fidelity",
    "brute_force_l1_sound": "no grid measurement beats the trace norm",
    "brute_force_fid_sound": "no grid measurement goes below the fidelity",
    "saturation_implication": "FvG-lower saturation implies S_max = inf or rho = sigma",
}

# Attribute of Tolerances holding each check's one-sided tolerance; a check
# fails when its slack is below -tolerance.
CHECK_TOLS = {
    "new_lower<=fidelity": "ineq_tol",
    "fvdg_lower<=new_lower": "chain_tol",
    "fidelity<=fvdg_upper": "ineq_tol",
    "lambda0_form": "form_tol",
    "mixture": "ineq_tol",
    "helstrom_attainment": "helstrom_tol",
    "fuchs_caves_attainment": "fuchs_caves_tol",
    "brute_force_l1_sound": "oracle_tol",
    "brute_force_fid_sound": "oracle_tol",
    "saturation_implication": None,
}


def check_tolerance(name: str, tol: Tolerances) -> float:
    attr = CHECK_TOLS[name]
    return 0.0 if attr is None else getattr(tol, attr)


def parse_ensemble(text: str, dim: int, seed: int) -> EnsembleSpec:
    """``"bures"`` or ``"rank_deficient:3"`` -> EnsembleSpec for one dimension."""
    kind, _, rank = text.partition(":")
    rank_val = None
    if rank:
        try:
            rank_val = int(rank)
        except ValueError as exc:
            raise InvalidSpec(f"bad rank in ensemble {text!r}") from exc
        rank_val = min(rank_val, dim)
    if kind not in ENSEMBLE_KINDS:
        raise InvalidSpec(f"unknown ensemble {text!r}")
    return EnsembleSpec(kind, dim, derive_seed(seed, dim, ENSEMBLE_KINDS.index(kind), rank_val or 0), rank_val)


@dataclass(frozen=True)
class CampaignConfig:
    dims: tuple[int, ...] = (2, 3, 4, 6, 8)
    ensembles: tuple[str, ...] = ENSEMBLE_KINDS
    trials_per_cell: int = 10_000
    seed: int = 20140101
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str = "csv"
    # Every n-th trial gets the extra checks; 0 disables them.
    mixture_stride: int = 10
    attainment_stride: int = 10
    brute_force_stride: int = 100
    brute_force_resolution: int = 200
    top_k: int = 10
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "ensembles", tuple(str(e) for e in self.ensembles))
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        object.__setattr__(self, "tolerances", dict(self.tolerances or {}))
        self.validate()

    def validate(self) -> None:
        if not self.dims or any(d < 1 for d in self.dims):
            raise InvalidSpec(f"dims must be positive integers, got {self.dims}")
        if not self.ensembles:
            raise InvalidSpec("at least one ensemble is required")
        for e in self.ensembles:
            parse_ensemble(e, max(self.dims), 0)
        if self.trials_per_cell < 1:
            raise InvalidSpec("trials_per_cell must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        bad = [x for x in self.lambda_grid if not (0.0 <= x <= 1.0) or math.isnan(x)]
        if bad:
            raise InvalidSpec(f"lambda_grid values must lie in [0, 1], got {bad}")
        if self.format not in ("csv", "json"):
            raise InvalidSpec(f"format must be csv or json, got {self.format!r}")
        for name in ("mixture_stride", "attainment_stride", "brute_force_stride", "top_k"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")
        if self.brute_force_resolution < 2:
            raise InvalidSpec("brute_force_resolution must be >= 2")
        if self.workers < 1:
            raise InvalidSpec("workers must be >= 1")
        try:
            Tolerances.from_mapping(self.tolerances)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidSpec(f"bad tolerance override: {exc}") from exc

    @property
    def tol(self) -> Tolerances:
        return Tolerances.from_mapping(self.tolerances)

    def cells(self) -> list[EnsembleSpec]:
        return [parse_ensemble(e, d, self.seed) for d in self.dims for e in self.ensembles]

    def echo(self) -> dict:
        """Config as plain JSON data (excluding run-only settings)."""
        out = dataclasses.asdict(self)
        out.pop("workers")
        out["dims"] = list(self.dims)
        out["ensembles"] = list(self.ensembles)
        out["lambda_grid"] = list(self.lambda_grid)
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "CampaignConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown config fields {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FidboundError):
                raise
            raise InvalidSpec(str(exc)) from exc


# --------------------------------------------------------------------------
# Statistics
# --------------------------------------------------------------------------


@dataclass
class CheckStats:
    """Running tally for one inequality; slack = margin by which it holds."""

    checked: int = 0
    violations: int = 0
    min_slack: float = math.inf
    max_slack: float = -math.inf
    tightest: tuple | None = None  # (cell, trial, extra)

    def add(self, slack: float, tol: float, where: tuple) -> None:
        self.checked += 1
        if slack < -tol:
            self.violations += 1
        key = (slack,) + where
        if self.tightest is None or key < (self.min_slack,) + self.tightest:
            self.min_slack = slack
            self.tightest = where
        self.max_slack = max(self.max_slack, slack)

    def merge(self, other: "CheckStats") -> None:
        self.checked += other.checked
        self.violations += other.violations
        self.max_slack = max(self.max_slack, other.max_slack)
        if other.tightest is not None and (
            self.tightest is None or (other.min_slack,) + other.tightest < (self.min_slack,) + self.tightest
        ):
            self.min_slack = other.min_slack
            self.tightest = other.tightest


@dataclass
class TrialRow:
    cell: int
    dim: int
    ensemble: str
    trial: int
    report: bounds.BoundReport
    fvdg_saturated: bool

    def csv_values(self) -> list[str]:
        r = self.report
        return [
            str(self.dim),
            self.ensemble,
            str(self.trial),
            fmt(r.fidelity),
            fmt(r.trace_norm),
            fmt(r.s_max),
            fmt(r.lambda0),
            fmt(r.fvdg_lower),
            fmt(r.fvdg_upper),
            fmt(r.new_lower),
            fmt(r.gap_new_vs_fvdg),
            "true" if self.fvdg_saturated else "false",
        ]

    def as_json(self) -> dict:
        return dict(zip(CSV_COLUMNS, [self.dim, self.ensemble, self.trial] + [
            jsonable(getattr(self.report, c)) for c in CSV_COLUMNS[3:-1]
        ] + [self.fvdg_saturated]))


def fmt(x: float) -> str:
    """15 significant digits; ``inf`` spelled literally."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".15g")


def jsonable(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".15g"))


def parse_extended(x) -> float:
    return math.inf if x in ("inf", math.inf) else float(x)


@dataclass
class UnitResult:
    rows: list[TrialRow]
    stats: dict[str, CheckStats]
    brute_force_max_gap: float = 0.0


@dataclass
class CampaignResult:
    config: CampaignConfig
    rows: list[TrialRow]
    stats: dict[str, CheckStats]
    brute_force_max_gap: float
    extremal_instances: list[dict]

    @property
    def total_violations(self) -> int:
        return sum(s.violations for s in self.stats.values())

    def summary(self) -> dict:
        return {
            "tool": "fidbound",
            "version": __version__,
            "config": self.config.echo(),
            "trials": len(self.rows),
            "violations_total": self.total_violations,
            "checks": {
                name: {
                    "description": CHECKS[name],
                    "tolerance": check_tolerance(name, self.config.tol),
                    "checked": s.checked,
                    "violations": s.violations,
                    "min_slack": jsonable(s.min_slack) if s.checked else None,
                    "max_slack": jsonable(s.max_slack) if s.checked else None,
                }
                for name, s in self.stats.items()
            },
            "brute_force_max_gap": jsonable(self.brute_force_max_gap),
            "extremal_instances": self.extremal_instances,
        }


# --------------------------------------------------------------------------
# Trial evaluation
# --------------------------------------------------------------------------


def _fresh_stats() -> dict[str, CheckStats]:
    return {name: CheckStats() for name in CHECKS}


def _strided(trial: int, stride: int) -> bool:
    return stride > 0 and trial % stride == 0


def evaluate_pair(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    config: CampaignConfig,
    stats: dict[str, CheckStats],
    where: tuple,
    trial: int,
) -> tuple[bounds.BoundReport, bool, float]:
    """Run every enabled check on one pair; returns (report, saturated flag, brute-force gap)."""
    tol = rho.tol

    def add(name, slack, at=where):
        stats[name].add(slack, check_tolerance(name, tol), at)

    rep = bounds.bound_report(rho, sigma)
    add("new_lower<=fidelity", rep.fidelity - rep.new_lower)
    add("fvdg_lower<=new_lower", rep.new_lower - rep.fvdg_lower)
    add("fidelity<=fvdg_upper", rep.fvdg_upper - rep.fidelity)
    add("lambda0_form", -abs(rep.new_lower - bounds.lambda0_form(rep.trace_norm, rep.lambda0)))
    saturated = abs(rep.fidelity - rep.fvdg_lower) <= tol.sat_tol
    implication = (not saturated) or math.isinf(rep.s_max) or rep.trace_norm <= tol.sat_tol
    add("saturation_implication", 0.0 if implication else -1.0)

    if _strided(trial, config.mixture_stride):
        for lam in config.lambda_grid:
            lhs, rhs = bounds.mixture_bound(bounds.MixtureCase(rho, sigma, lam))
            add("mixture", lhs - rhs, where + (lam,))

    if _strided(trial, config.attainment_stride):
        hel = metrics.helstrom_measurement(rho, sigma)
        add("helstrom_attainment", -abs(hel.achieved - rep.trace_norm))
        # Exact attainment needs one support inside the other.
        if (
            metrics.support_leak(rho, sigma) <= tol.support_leak_tol
            or metrics.support_leak(sigma, rho) <= tol.support_leak_tol
        ):
            fc = metrics.fuchs_caves_measurement(rho, sigma)
            add("fuchs_caves_attainment", -abs(fc.achieved - rep.fidelity))

    gap = 0.0
    if rho.dim == 2 and _strided(trial, config.brute_force_stride):
        max_l1, min_fid = metrics.brute_force_povm_extrema(rho, sigma, config.brute_force_resolution)
        add("brute_force_l1_sound", rep.trace_norm - max_l1)
        add("brute_force_fid_sound", min_fid - rep.fidelity)
        gap = max(rep.trace_norm - max_l1, min_fid - rep.fidelity)
    return rep, saturated, gap


def _run_unit(args) -> UnitResult:
    config, cell_index, spec, start, stop = args
    stats = _fresh_stats()
    rows = []
    gap = 0.0
    for trial in range(start, stop):
        rho, sigma = sample_pair(spec, trial, config.tol)
        rep, saturated, g = evaluate_pair(rho, sigma, config, stats, (cell_index, trial), trial)
        gap = max(gap, g)
        rows.append(TrialRow(cell_index, spec.dim, spec.label, trial, rep, saturated))
    return UnitResult(rows, stats, gap)


def _units(config: CampaignConfig, chunk: int) -> list[tuple]:
    units = []
    for cell_index, spec in enumerate(config.cells()):
        for start in range(0, config.trials_per_cell, chunk):
            units.append((config, cell_index, spec, start, min(start + chunk, config.trials_per_cell)))
    return units


def run_units(config: CampaignConfig, chunk: int = 500) -> list[UnitResult]:
    units = _units(config, chunk)
    if config.workers == 1:
        return [_run_unit(u) for u in units]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_run_unit, units))


def run_campaign(config: CampaignConfig, chunk: int = 500) -> CampaignResult:
    """Run the whole campaign and aggregate the results deterministically."""
    cells = config.cells()
    log.info("campaign: %d cells x %d trials", len(cells), config.trials_per_cell)
    results = run_units(config, chunk)
    stats = _fresh_stats()
    rows: list[TrialRow] = []
    gap = 0.0
    for res in results:
        rows.extend(res.rows)
        for name, s in res.stats.items():
            stats[name].merge(s)
        gap = max(gap, res.brute_force_max_gap)
    rows.sort(key=lambda r: (r.cell, r.trial))
    extremal = _extremal_instances(cells, stats, rows, config.tol)
    return CampaignResult(config, rows, stats, gap, extremal)


def _extremal_instances(
    cells: list[EnsembleSpec], stats: dict[str, CheckStats], rows: list[TrialRow], tol: Tolerances
) -> list[dict]:
    """State payloads of the tightest pair per check, plus the largest-gap pair."""
    picks: list[tuple[str, tuple, float]] = []
    for name, s in stats.items():
        if s.tightest is not None and name != "saturation_implication":
            picks.append((f"tightest:{name}", s.tightest, s.min_slack))
    if rows:
        best = max(rows, key=lambda r: (r.report.gap_new_vs_fvdg, -r.cell, -r.trial))
        picks.append(("largest_gap_new_vs_fvdg", (best.cell, best.trial), best.report.gap_new_vs_fvdg))
    out = []
    for label, where, value in picks:
        cell, trial = where[0], where[1]
        spec = cells[cell]
        rho, sigma = sample_pair(spec, trial, tol)
        entry = {
            "label": label,
            "dim": spec.dim,
            "ensemble": spec.label,
            "trial": trial,
            "value": jsonable(value),
            "rho": state_to_payload(rho),
            "sigma": state_to_payload(sigma),
        }
        if len(where) > 2:
            entry["lambda"] = where[2]
        out.append(entry)
    return out


def recheck_instance(entry: dict) -> float:
    """Recompute the recorded quantity of an extremal instance from its state payloads."""
    from .states import state_from_payload

    rho = state_from_payload(entry["rho"])
    sigma = state_from_payload(entry["sigma"])
    label = entry["label"]
    rep = bounds.bound_report(rho, sigma)
    if label == "largest_gap_new_vs_fvdg":
        return rep.gap_new_vs_fvdg
    name = label.split(":", 1)[1]
    if name == "new_lower<=fidelity":
        return rep.fidelity - rep.new_lower
    if name == "fvdg_lower<=new_lower":
        return rep.new_lower - rep.fvdg_lower
    if name == "fidelity<=fvdg_upper":
        return rep.fvdg_upper - rep.fidelity
    if name == "lambda0_form":
        return -abs(rep.new_lower - bounds.lambda0_form(rep.trace_norm, rep.lambda0))
    if name == "mixture":
        lhs, rhs = bounds.mixture_bound(bounds.MixtureCase(rho, sigma, entry["lambda"]))
        return lhs - rhs
    if name == "helstrom_attainment":
        return -abs(metrics.helstrom_measurement(rho, sigma).achieved - rep.trace_norm)
    if name == "fuchs_caves_attainment":
        return -abs(metrics.fuchs_caves_measurement(rho, sigma).achieved - rep.fidelity)
    if name in ("brute_force_l1_sound", "brute_force_fid_sound"):
        max_l1, min_fid = metrics.brute_force_povm_extrema(rho, sigma)
        return rep.trace_norm - max_l1 if name.startswith("brute_force_l1") else min_fid - rep.fidelity
    raise KeyError(label)


def iter_pairs(config: CampaignConfig) -> Iterable[tuple[int, EnsembleSpec, int, DensityMatrix, DensityMatrix]]:
    for cell_index, spec in enumerate(config.cells()):
        for trial in range(config.trials_per_cell):
            rho, sigma = sample_pair(spec, trial, config.tol)
            yield cell_index, spec, trial, rho, sigma

