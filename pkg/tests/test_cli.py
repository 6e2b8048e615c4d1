import csv
import json
import math

import numpy as np
import pytest

from fidbound import campaign, cli
from fidbound.states import DensityMatrix, dump_state, load_state

SMALL = ["--dims", "2,3", "--trials-per-cell", "4", "--seed", "9", "--brute-force-stride", "2",
         "--brute-force-resolution", "40"]


@pytest.fixture
def state_files(tmp_path):
    paths = {}
    for name, rho in {
        "p": DensityMatrix.diagonal([0.75, 0.25]),
        "q": DensityMatrix.diagonal([0.5, 0.5]),
        "three": DensityMatrix.maximally_mixed(3),
        "zero": DensityMatrix.pure([1, 0]),
        "one": DensityMatrix.pure([0, 1]),
    }.items():
        paths[name] = tmp_path / f"{name}.json"
        dump_state(rho, paths[name])
    return paths


def metrics_json(capsys, a, b):
    assert cli.main(["metrics", str(a), str(b), "--json"]) == 0
    return json.loads(capsys.readouterr().out)


class TestMetrics:
    def test_identical(self, capsys, state_files):
        out = metrics_json(capsys, state_files["p"], state_files["p"])
        assert out["fidelity"] == pytest.approx(1.0, abs=1e-12)
        assert out["trace_norm"] == 0.0
        for key in ("fvdg_lower", "fvdg_upper", "new_lower"):
            assert out[key] == pytest.approx(1.0, abs=1e-12)
        assert out["states_equal"] and out["fvdg_lower_saturated"]

    def test_diagonal_example(self, capsys, state_files):
        out = metrics_json(capsys, state_files["p"], state_files["q"])
        assert out["fidelity"] == pytest.approx(0.965926, abs=1e-6)
        assert out["trace_norm"] == pytest.approx(0.5, abs=1e-12)
        assert out["s_max"] == pytest.approx(math.log(1.5), abs=1e-12)
        assert out["lambda0"] == pytest.approx(1.5, abs=1e-12)
        assert out["new_lower"] == pytest.approx(0.862372, abs=1e-6)
        assert out["gap_new_vs_fvdg"] == pytest.approx(0.112372, abs=1e-6)
        assert (out["fvdg_lower"], out["fvdg_upper"]) == pytest.approx((0.75, 0.968246), abs=1e-6)

    def test_infinite_smax_serialization(self, capsys, state_files):
        out = metrics_json(capsys, state_files["zero"], state_files["one"])
        assert out["s_max"] == "inf" and out["lambda0"] == "inf"
        assert out["s_max_infinite"]

    def test_text_output(self, capsys, state_files):
        assert cli.main(["metrics", str(state_files["zero"]), str(state_files["one"])]) == 0
        lines = dict(line.split(None, 1) for line in capsys.readouterr().out.splitlines())
        assert lines["s_max"].strip() == "inf"
        assert lines["fvdg_lower_saturated"].strip() == "true"

    def test_malformed_json(self, tmp_path, state_files, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert cli.main(["metrics", str(bad), str(state_files["p"])]) == 2
        assert "malformed JSON" in capsys.readouterr().err

    def test_invariant_failure_named(self, tmp_path, state_files, capsys):
        bad = tmp_path / "trace.json"
        bad.write_text(json.dumps({"dim": 1, "matrix": [[[2.0, 0.0]]]}))
        assert cli.main(["metrics", str(bad), str(state_files["p"])]) == 2
        assert "trace" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, state_files):
        assert cli.main(["metrics", str(tmp_path / "nope.json"), str(state_files["p"])]) == 2

    def test_dimension_mismatch(self, state_files):
        assert cli.main(["metrics", str(state_files["p"]), str(state_files["three"])]) == 3

    @pytest.mark.parametrize("override", ["ineq_tol=-1", "bogus=1", "sat_tol"])
    def test_bad_tolerance(self, state_files, override):
        assert cli.main(["metrics", str(state_files["p"]), str(state_files["q"]), "--tol", override]) == 2


class TestVerify:
    def run_verify(self, tmp_path, name, *extra):
        out = tmp_path / name
        code = cli.main(["verify", *SMALL, "--output", str(out), *extra])
        return code, out

    def test_determinism_across_workers(self, tmp_path, monkeypatch):
        # Same relative output path so the echoed config is identical too.
        for workers in ("1", "2"):
            (tmp_path / workers).mkdir()
            monkeypatch.chdir(tmp_path / workers)
            assert cli.main(["verify", *SMALL, "--output", "run.csv", "--workers", workers]) == 0
        for name in ("run.csv", "run.csv.summary.json"):
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()

    def test_single_trial_determinism(self, tmp_path):
        args = ["--dims", "2", "--trials-per-cell", "1", "--seed", "3"]
        for name in ("x.csv", "y.csv"):
            assert cli.main(["verify", *args, "--output", str(tmp_path / name)]) == 0
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()

    def test_csv_contents(self, tmp_path):
        _, out = self.run_verify(tmp_path, "rows.csv")
        with out.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == campaign.CSV_COLUMNS
        assert len(rows) == 1 + 2 * 4 * 4
        for row in rows[1:]:
            rec = dict(zip(rows[0], row))
            assert campaign.parse_extended(rec["new_lower"]) <= float(rec["fidelity"]) + 1e-8
            assert float(rec["s_max"]) >= 0  # "inf" parses as a float too

    def test_summary(self, tmp_path):
        _, out = self.run_verify(tmp_path, "rows.csv")
        summary = json.loads((tmp_path / "rows.csv.summary.json").read_text())
        assert summary["tool"] == "fidbound"
        assert summary["violations_total"] == 0
        assert summary["config"]["dims"] == [2, 3]
        assert summary["config"]["trials_per_cell"] == 4
        for entry in summary["extremal_instances"]:
            value = campaign.recheck_instance(entry)
            assert value == pytest.approx(campaign.parse_extended(entry["value"]), abs=1e-12)

    def test_extremal_round_trip(self, tmp_path):
        self.run_verify(tmp_path, "rows.csv")
        summary = json.loads((tmp_path / "rows.csv.summary.json").read_text())
        for i, entry in enumerate(summary["extremal_instances"]):
            for key in ("rho", "sigma"):
                mat = np.array([[complex(*z) for z in row] for row in entry[key]["matrix"]])
                path = tmp_path / f"{i}-{key}.json"
                path.write_text(json.dumps(entry[key]))
                back = load_state(path)
                assert np.abs(back.mat - mat).max() <= 1e-15

    def test_json_format(self, tmp_path):
        code, out = self.run_verify(tmp_path, "run.json", "--format", "json")
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["violations_total"] == 0
        assert len(doc["rows"]) == 2 * 4 * 4
        assert set(doc["rows"][0]) == set(campaign.CSV_COLUMNS)

    def test_summary_to_stdout(self, capsys):
        assert cli.main(["verify", "--dims", "2", "--trials-per-cell", "2"]) == 0
        captured = capsys.readouterr()
        assert json.loads(captured.out)["trials"] == 8
        assert "0 violations" in captured.err

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dims": [3], "trials_per_cell": 2, "seed": 1, "ensembles": ["bures"],
                                   "lambda_grid": [0.0, 0.5, 1.0]}))
        out = tmp_path / "o.json"
        assert cli.main(["verify", "--config", str(cfg), "--trials-per-cell", "3", "--format", "json",
                         "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["trials_per_cell"] == 3
        assert doc["config"]["dims"] == [3]
        assert doc["config"]["lambda_grid"] == [0.0, 0.5, 1.0]
        assert len(doc["rows"]) == 3

    def test_tolerance_flag_reaches_summary(self, tmp_path):
        out = tmp_path / "o.json"
        assert cli.main(["verify", "--dims", "2", "--trials-per-cell", "1", "--tol", "ineq_tol=1e-9",
                         "--format", "json", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["checks"]["new_lower<=fidelity"]["tolerance"] == 1e-9

    @pytest.mark.parametrize(
        "args",
        [
            ["--lambda-grid", "0,1.5"],
            ["--trials-per-cell", "0"],
            ["--dims", "two"],
            ["--ensembles", "ginibre"],
            ["--format", "xml"],
            ["--tol", "nope=1"],
            ["--config", "/nonexistent/cfg.json"],
        ],
    )
    def test_config_errors(self, args):
        assert cli.main(["verify", "--dims", "2", "--trials-per-cell", "1", *args]) == 2

    def test_bad_config_contents(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"trials": 3}))
        assert cli.main(["verify", "--config", str(cfg)]) == 2
        cfg.write_text("[1, 2]")
        assert cli.main(["verify", "--config", str(cfg)]) == 2

    def test_violation_exit_code(self, monkeypatch, capsys):
        # A deliberately wrong bound (always 1) must be caught and fail the run.
        monkeypatch.setattr(campaign.bounds, "new_lower_from", lambda t, s: 1.0)
        assert cli.main(["verify", "--dims", "2", "--trials-per-cell", "3"]) == 4
        assert json.loads(capsys.readouterr().out)["violations_total"] > 0


class TestSaturate:
    def test_ranked_with_baselines(self, tmp_path):
        out = tmp_path / "sat.json"
        assert cli.main(["saturate", "--dims", "2", "--ensembles", "hilbert_schmidt", "--trials-per-cell", "30",
                         "--top-k", "5", "--format", "json", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        rows = doc["rows"]
        campaign_rows = [r for r in rows if r["source"] == "campaign"]
        assert len(campaign_rows) == 5
        slacks = [r["fvdg_slack"] for r in campaign_rows]
        assert slacks == sorted(slacks)
        # Random HS qubit pairs stay strictly away from saturation.
        assert min(slacks) > 1e-8
        ortho = next(r for r in rows if r["source"] == "baseline:orthogonal_pure")
        assert ortho["fvdg_slack"] == pytest.approx(0.0, abs=1e-12)
        assert ortho["s_max_infinite"] and ortho["fvdg_lower_saturated"]
        equal = next(r for r in rows if r["source"] == "baseline:equal")
        assert equal["fvdg_slack"] == pytest.approx(0.0, abs=1e-12)
        assert equal["states_equal"]
        assert doc["implication_violations"] == 0

    def test_csv(self, tmp_path):
        out = tmp_path / "sat.csv"
        assert cli.main(["saturate", *SMALL, "--output", str(out)]) == 0
        header = out.read_text().splitlines()[0].split(",")
        assert tuple(header) == cli.SATURATE_COLUMNS

    def test_config_error(self):
        assert cli.main(["saturate", "--lambda-grid", "-0.1"]) == 2


class TestCompareBounds:
    def test_rows(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert cli.main(["compare-bounds", *SMALL, "--output", str(out)]) == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert tuple(rows[0]) == cli.COMPARE_COLUMNS
        for r in rows:
            gap = float(r["gap_new_vs_fvdg"])
            assert gap >= -1e-12
            assert gap == pytest.approx(float(r["new_lower"]) - float(r["fvdg_lower"]), abs=1e-14)
            if r["s_max"] == "inf":
                assert gap == 0.0

    def test_negative_gap_exit_code(self, monkeypatch):
        monkeypatch.setattr(campaign.bounds, "new_lower_from", lambda t, s: -1.0)
        assert cli.main(["compare-bounds", "--dims", "2", "--trials-per-cell", "2"]) == 4


class TestParser:
    def test_version(self, capsys):
        assert cli.main(["--version"]) == 0
        assert "fidbound" in capsys.readouterr().out

    def test_no_command(self):
        assert cli.main([]) == 2

    def test_unknown_flag(self):
        assert cli.main(["verify", "--frobnicate"]) == 2

    def test_verbose_after_subcommand(self, state_files):
        assert cli.main(["metrics", str(state_files["p"]), str(state_files["q"]), "-v"]) == 0
