"""End-to-end tests of the command-line interface."""

import csv
import json

import numpy as np
import pytest

from ssjacobi import cli, jacobidiff, semisep
from ssjacobi.specfun import JacobiParams


def run(argv):
    return cli.main(argv)


class TestGen:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run(["gen", "--alpha", "4", "--beta", "2", "--n", "12",
                    "--format", "csv", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh)]
        dense = np.array(rows)
        assert dense.shape == (12, 12)
        ref = jacobidiff.build(JacobiParams(4.0, 2.0), 12, "generators").dense()
        assert np.array_equal(dense, ref)

    def test_json_output_schema(self, tmp_path):
        out = tmp_path / "g.json"
        assert run(["gen", "--n", "10", "--format", "json",
                    "--source", "generators", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert sorted(payload) == ["a", "b", "c", "d", "e", "n", "rank"]
        assert payload["n"] == 10 and payload["rank"] == 2
        loaded = semisep.from_json(out.read_text())
        ref = jacobidiff.build(JacobiParams(2.0, 2.0), 10, "generators").dense()
        assert np.abs(loaded.to_dense() - ref).max() <= 1e-15

    def test_json_requires_generator_source(self, tmp_path):
        out = tmp_path / "g.json"
        assert run(["gen", "--format", "json", "--source", "oracle",
                    "--out", str(out)]) == 2

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["gen", "--n", "16", "--out", str(a)])
        run(["gen", "--n", "16", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize(
        "argv",
        [
            ["gen", "--alpha", "0"],
            ["gen", "--beta", "-1"],
            ["gen", "--n", "0"],
            ["gen", "--dt", "0"],
        ],
    )
    def test_invalid_configuration(self, argv, tmp_path, capsys):
        assert run(argv + ["--out", str(tmp_path / "x.csv")]) == 2
        err = capsys.readouterr().err
        assert "invalid configuration" in err

    def test_unknown_source_is_usage_error(self, tmp_path):
        assert run(["gen", "--source", "magic",
                    "--out", str(tmp_path / "x.csv")]) == 2

    def test_unwritable_path(self, capsys):
        assert run(["gen", "--out", "/nonexistent-dir/x.csv"]) == 1


class TestVerify:
    def test_defaults_pass(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert run(["verify", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["schema_version"] == 1
        assert report["alpha"] == 2.0 and report["beta"] == 2.0 and report["n"] == 32
        assert all(c["pass"] for c in report["checks"].values())
        stdout = capsys.readouterr().out
        assert "PASS route_agreement" in stdout

    def test_asymmetric_case_passes(self, tmp_path):
        out = tmp_path / "report.json"
        assert run(["verify", "--alpha", "4", "--beta", "2", "--n", "64",
                    "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert "parity" not in report["checks"]
        for name in (
            "route_agreement",
            "skew_symmetry_exact",
            "skew_symmetry_quadrature",
            "rank2_structure",
            "product_rank_additivity",
            "square_negative_semidefinite",
            "rank1_product_dense_agreement",
            "boundedness_sums_dual_route",
        ):
            assert report["checks"][name]["pass"], name

    def test_against_matching_file(self, tmp_path):
        gfile = tmp_path / "g.json"
        run(["gen", "--n", "24", "--format", "json", "--source", "generators",
             "--out", str(gfile)])
        out = tmp_path / "report.json"
        assert run(["verify", "--n", "24", "--against", str(gfile),
                    "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["checks"]["against_file_agreement"]["pass"]

    def test_against_corrupted_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("not json at all")
        out = tmp_path / "report.json"
        assert run(["verify", "--n", "16", "--against", str(bad),
                    "--out", str(out)]) == 1
        report = json.loads(out.read_text())
        assert not report["checks"]["against_file_agreement"]["pass"]
        assert "FAIL against_file_agreement" in capsys.readouterr().out

    def test_against_wrong_size_file(self, tmp_path):
        gfile = tmp_path / "g.json"
        run(["gen", "--n", "8", "--format", "json", "--source", "generators",
             "--out", str(gfile)])
        out = tmp_path / "report.json"
        assert run(["verify", "--n", "16", "--against", str(gfile),
                    "--out", str(out)]) == 1


class TestDemo:
    def test_diffusion(self, tmp_path, capsys):
        out = tmp_path / "series.csv"
        assert run(["demo", "diffusion", "--n", "32", "--dt", "0.01",
                    "--steps", "50", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "t", "l2_norm"]
        norms = [float(r[2]) for r in rows[1:]]
        assert len(norms) == 51
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
        assert "norm nonincreasing: yes" in capsys.readouterr().out

    def test_advection(self, tmp_path, capsys):
        out = tmp_path / "series.csv"
        assert run(["demo", "advection", "--n", "32", "--dt", "0.01",
                    "--steps", "50", "--out", str(out)]) == 0
        assert "norm conserved: yes" in capsys.readouterr().out

    def test_source_routes_agree(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["demo", "diffusion", "--n", "32", "--steps", "20",
             "--source", "generators", "--out", str(a)])
        run(["demo", "diffusion", "--n", "32", "--steps", "20",
             "--source", "closed-form", "--out", str(b)])
        na = np.array([float(r[2]) for r in list(csv.reader(open(a)))[1:]])
        nb = np.array([float(r[2]) for r in list(csv.reader(open(b)))[1:]])
        assert np.abs(na - nb).max() <= 1e-9

    def test_missing_problem_is_usage_error(self):
        assert run(["demo"]) == 2

    def test_unknown_problem_is_usage_error(self):
        assert run(["demo", "oscillation"]) == 2


class TestParser:
    def test_no_command_is_usage_error(self):
        assert run([]) == 2

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 2
