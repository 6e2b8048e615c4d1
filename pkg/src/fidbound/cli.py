"""Command-line front end.

Exit codes: 0 success, 2 input or config error, 3 dimension mismatch,
4 an inequality was violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__, bounds
from .campaign import (
    CSV_COLUMNS,
    CampaignConfig,
    TrialRow,
    fmt,
    jsonable,
    run_campaign,
    run_units,
)
from .constants import Tolerances
from .errors import DimensionMismatch, FidboundError
from .states import DensityMatrix, load_state

log = logging.getLogger("fidbound")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIM = 3
EXIT_VIOLATION = 4

SATURATE_COLUMNS = (
    "rank",
    "source",
    "dim",
    "ensemble",
    "trial",
    "fvdg_slack",
    "fvdg_lower_saturated",
    "s_max_infinite",
    "states_equal",
    "fidelity",
    "trace_norm",
    "s_max",
    "fvdg_lower",
    "new_lower",
)

COMPARE_COLUMNS = (
    "dim",
    "ensemble",
    "trial",
    "trace_norm",
    "s_max",
    "fvdg_lower",
    "new_lower",
    "fidelity",
    "gap_new_vs_fvdg",
)


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Config assembly: file first, flags override.
# --------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _tol_pair(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tolerance value in {text!r}") from exc


def _add_campaign_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with CampaignConfig fields")
    p.add_argument("--dims", type=_int_list, help="comma-separated dimensions, e.g. 2,3,4")
    p.add_argument("--ensembles", type=_str_list,
                   help="comma-separated ensembles: pure_haar, hilbert_schmidt, bures, rank_deficient[:k]")
    p.add_argument("--trials-per-cell", type=int, dest="trials_per_cell")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda-grid", type=_float_list, dest="lambda_grid")
    p.add_argument("--tol", type=_tol_pair, action="append", dest="tol_overrides", metavar="NAME=VALUE",
                   help="override a tolerance from the central table (repeatable)")
    p.add_argument("--output", "--output-path", dest="output_path")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--mixture-stride", type=int, dest="mixture_stride")
    p.add_argument("--attainment-stride", type=int, dest="attainment_stride")
    p.add_argument("--brute-force-stride", type=int, dest="brute_force_stride")
    p.add_argument("--brute-force-resolution", type=int, dest="brute_force_resolution")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--workers", type=int)


_CONFIG_FLAGS = (
    "dims", "ensembles", "trials_per_cell", "seed", "lambda_grid", "output_path", "format",
    "mixture_stride", "attainment_stride", "brute_force_stride", "brute_force_resolution",
    "top_k", "workers",
)


def build_config(args: argparse.Namespace) -> CampaignConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if args.tol_overrides:
        tols = dict(data.get("tolerances") or {})
        tols.update(dict(args.tol_overrides))
        data["tolerances"] = tols
    return CampaignConfig.from_mapping(data)


# --------------------------------------------------------------------------
# Writers
# --------------------------------------------------------------------------


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def _table(columns, records: list[dict], fmt_name: str, path: str | None, extra: dict | None = None) -> None:
    if fmt_name == "csv":
        _emit(_csv_text(columns, [[_cell(r[c]) for c in columns] for r in records]), path)
    else:
        doc = dict(extra or {})
        doc["rows"] = [{c: (jsonable(r[c]) if isinstance(r[c], float) else r[c]) for c in columns} for r in records]
        _emit(_json_text(doc), path)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        tol = Tolerances.from_mapping(dict(args.tol_overrides or []))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad tolerance override: {exc}") from exc
    rho = load_state(args.state_a, tol)
    sigma = load_state(args.state_b, tol)
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"{args.state_a} has dim {rho.dim}, {args.state_b} has dim {sigma.dim}")
    sat = bounds.saturation_report(rho, sigma, args.rank_tol)
    r = sat.chain_values
    record = {
        "dim": rho.dim,
        "fidelity": r.fidelity,
        "trace_norm": r.trace_norm,
        "s_max": r.s_max,
        "lambda0": r.lambda0,
        "fvdg_lower": r.fvdg_lower,
        "fvdg_upper": r.fvdg_upper,
        "new_lower": r.new_lower,
        "gap_new_vs_fvdg": r.gap_new_vs_fvdg,
        "fvdg_lower_saturated": sat.fvdg_lower_saturated,
        "s_max_infinite": sat.s_max_infinite,
        "states_equal": sat.states_equal,
    }
    if args.json:
        sys.stdout.write(_json_text({k: jsonable(v) if isinstance(v, float) else v for k, v in record.items()}))
    else:
        width = max(len(k) for k in record)
        for key, value in record.items():
            print(f"{key:<{width}}  {_cell(value)}")
    return EXIT_OK


def _summary_path(output_path: str) -> str:
    return output_path + ".summary.json"


def cmd_verify(args: argparse.Namespace) -> int:
    config = build_config(args)
    result = run_campaign(config)
    summary = result.summary()
    if config.format == "csv":
        if config.output_path is not None:
            _emit(_csv_text(CSV_COLUMNS, [row.csv_values() for row in result.rows]), config.output_path)
            _emit(_json_text(summary), _summary_path(config.output_path))
        else:
            _emit(_json_text(summary), None)
    else:
        doc = dict(summary)
        doc["rows"] = [row.as_json() for row in result.rows]
        _emit(_json_text(doc), config.output_path)
    for name, s in result.stats.items():
        if s.checked:
            log.info("%-26s checked=%-7d violations=%d min_slack=%s", name, s.checked, s.violations, fmt(s.min_slack))
    total = result.total_violations
    print(f"verify: {len(result.rows)} pairs, {total} violations", file=sys.stderr)
    return EXIT_VIOLATION if total else EXIT_OK


def _rows_only(config: CampaignConfig) -> list[TrialRow]:
    # Bound reports only; the extra per-trial checks are switched off.
    lean = CampaignConfig.from_mapping(
        {**config.echo(), "mixture_stride": 0, "attainment_stride": 0, "brute_force_stride": 0,
         "workers": config.workers}
    )
    rows = [row for unit in run_units(lean) for row in unit.rows]
    rows.sort(key=lambda r: (r.cell, r.trial))
    return rows


def _baseline_pairs(dims) -> list[tuple[str, int, DensityMatrix, DensityMatrix]]:
    out = []
    for d in sorted(set(dims)):
        if d >= 2:
            zero = [1.0] + [0.0] * (d - 1)
            one = [0.0, 1.0] + [0.0] * (d - 2)
            out.append(("baseline:orthogonal_pure", d, DensityMatrix.pure(zero), DensityMatrix.pure(one)))
        mixed = DensityMatrix.maximally_mixed(d)
        out.append(("baseline:equal", d, mixed, mixed))
    return out


def _saturation_record(source, dim, ensemble, trial, sat: bounds.SaturationReport) -> dict:
    r = sat.chain_values
    return {
        "source": source,
        "dim": dim,
        "ensemble": ensemble,
        "trial": trial,
        "fvdg_slack": sat.fvdg_slack,
        "fvdg_lower_saturated": sat.fvdg_lower_saturated,
        "s_max_infinite": sat.s_max_infinite,
        "states_equal": sat.states_equal,
        "fidelity": r.fidelity,
        "trace_norm": r.trace_norm,
        "s_max": r.s_max,
        "fvdg_lower": r.fvdg_lower,
        "new_lower": r.new_lower,
    }


def cmd_saturate(args: argparse.Namespace) -> int:
    config = build_config(args)
    tol = config.tol
    records = []
    violations = 0
    equal_pairs = 0
    for row in _rows_only(config):
        sat = bounds.saturation_from_report(row.report, tol.sat_tol)
        violations += not sat.implication_holds
        if sat.states_equal:
            # Trivially saturated; covered by the equal-state baseline row.
            equal_pairs += 1
            continue
        records.append(_saturation_record("campaign", row.dim, row.ensemble, row.trial, sat))
    records.sort(key=lambda r: r["fvdg_slack"])
    ranked = records[: config.top_k]
    for source, d, rho, sigma in _baseline_pairs(config.dims):
        sat = bounds.saturation_report(rho, sigma)
        violations += not sat.implication_holds
        ranked.append(_saturation_record(source, d, "constructed", -1, sat))
    for i, rec in enumerate(ranked):
        rec["rank"] = i
    extra = {"tool": "fidbound", "version": __version__, "config": config.echo(),
             "implication_violations": violations, "equal_pairs_skipped": equal_pairs}
    _table(SATURATE_COLUMNS, ranked, config.format, config.output_path, extra)
    print(
        f"saturate: {len(records)} pairs ranked ({equal_pairs} equal pairs skipped), "
        f"{violations} implication violations",
        file=sys.stderr,
    )
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_compare_bounds(args: argparse.Namespace) -> int:
    config = build_config(args)
    tol = config.tol
    records = []
    violations = 0
    for row in _rows_only(config):
        r = row.report
        violations += r.gap_new_vs_fvdg < -tol.chain_tol
        records.append({
            "dim": row.dim, "ensemble": row.ensemble, "trial": row.trial,
            "trace_norm": r.trace_norm, "s_max": r.s_max, "fvdg_lower": r.fvdg_lower,
            "new_lower": r.new_lower, "fidelity": r.fidelity, "gap_new_vs_fvdg": r.gap_new_vs_fvdg,
        })
    extra = {"tool": "fidbound", "version": __version__, "config": config.echo(), "gap_violations": violations}
    _table(COMPARE_COLUMNS, records, config.format, config.output_path, extra)
    print(f"compare-bounds: {len(records)} rows, {violations} negative gaps", file=sys.stderr)
    return EXIT_VIOLATION if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log per-check statistics")
    parser = argparse.ArgumentParser(prog="fidbound", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"fidbound {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", parents=[common], help="fidelity, trace norm, S_max and all bounds for two state files")
    p.add_argument("state_a")
    p.add_argument("state_b")
    p.add_argument("--rank-tol", type=float, default=None)
    p.add_argument("--tol", type=_tol_pair, action="append", dest="tol_overrides", metavar="NAME=VALUE")
    p.add_argument("--json", action="store_true", help="print a JSON object instead of aligned text")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("verify", parents=[common], help="randomized campaign checking every inequality")
    _add_campaign_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("saturate", parents=[common], help="pairs closest to saturating the FvG lower bound")
    _add_campaign_flags(p)
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("compare-bounds", parents=[common], help="plot-ready rows comparing the FvG and new lower bounds")
    _add_campaign_flags(p)
    p.set_defaults(func=cmd_compare_bounds)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except DimensionMismatch as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (FidboundError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
