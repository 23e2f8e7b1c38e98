import csv
import io
import json

import numpy as np
import pytest

from ensemblage import cli
from ensemblage.states import random_density


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def pairs(v):
    return [[float(np.real(x)), float(np.imag(x))] for x in np.ravel(v)]


def matrix_pairs(m):
    return [pairs(row) for row in m]


@pytest.fixture
def singleton_file(tmp_path):
    rho = random_density(2, 2, 3).matrix
    return write_json(tmp_path / "one.json", {"dim": 2, "members": [
        {"probability": 1.0, "matrix": matrix_pairs(rho)}]})


class TestQuantumness:
    def test_b92_report_has_paper_value(self, capsys):
        code, out, _ = run(["quantumness", "--ensemble", "b92", "--measure", "affinity",
                            "--restarts", "4", "--output", "json"], capsys)
        assert code == 0
        res = json.loads(out)["ensembles"][0]["results"]["affinity"]
        assert res["paper_value"] == 0.293
        assert res["value"] == pytest.approx(res["oracle_value"], abs=2e-3)
        assert res["value"] == pytest.approx(1 - np.sqrt(3) / 2, abs=1e-8)

    def test_singleton_file_is_zero(self, singleton_file, capsys):
        code, out, _ = run(["quantumness", "--ensemble", singleton_file, "--restarts", "4",
                            "--output", "json"], capsys)
        assert code == 0
        report = json.loads(out)
        for res in report["ensembles"][0]["results"].values():
            assert abs(res["value"]) <= 2e-3
            assert res["paper_value"] is None

    def test_csv_columns(self, capsys):
        code, out, _ = run(["quantumness", "--ensemble", "catalog", "--restarts", "2", "--output", "csv"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert list(rows[0]) == ["name", "measure", "q_value", "oracle_value", "paper_q", "restarts", "seed"]
        assert len(rows) == 8
        assert {r["name"] for r in rows} == {"b92", "bb84", "trine", "six_state"}

    def test_json_bytes_deterministic(self, tmp_path, capsys):
        outs = []
        for k in range(2):
            path = tmp_path / f"q{k}.json"
            argv = ["quantumness", "--ensemble", "bb84", "--measure", "both", "--restarts", "4",
                    "--output", "json", "--out", str(path)]
            assert run(argv, capsys)[0] == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_json_round_trip(self, capsys):
        _, out, _ = run(["quantumness", "--ensemble", "trine", "--restarts", "2", "--output", "json"], capsys)
        assert cli.dumps_json(json.loads(out)) == out

    def test_text_output(self, capsys):
        code, out, _ = run(["quantumness", "--ensemble", "b92", "--restarts", "2"], capsys)
        assert code == 0
        assert "b92" in out and "0.293" in out


class TestCoherence:
    @pytest.mark.parametrize("measure", ["fidelity", "affinity"])
    def test_b92_computational(self, measure, capsys):
        _, out, _ = run(["coherence", "--ensemble", "b92", "--measure", measure, "--output", "json"], capsys)
        value = json.loads(out)["ensembles"][0]["results"][measure]["value"]
        assert value == pytest.approx(0.5 - 0.5 / np.sqrt(2), abs=1e-9)

    def test_incoherent_file_is_zero(self, tmp_path, capsys):
        path = write_json(tmp_path / "inc.json", {"dim": 3, "members": [
            {"probability": 0.4, "matrix": matrix_pairs(np.diag([0.2, 0.3, 0.5]))},
            {"probability": 0.6, "pure": pairs([0, 1, 0])}]})
        _, out, _ = run(["coherence", "--ensemble", path, "--output", "json"], capsys)
        for res in json.loads(out)["ensembles"][0]["results"].values():
            assert res["value"] == pytest.approx(0.0, abs=1e-9)

    def test_haar_basis_repeatable(self, capsys):
        argv = ["coherence", "--ensemble", "six_state", "--basis", "haar:7", "--output", "json"]
        assert run(argv, capsys)[1] == run(argv, capsys)[1]

    def test_file_basis(self, tmp_path, capsys):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        path = write_json(tmp_path / "h.json", {"matrix": matrix_pairs(h)})
        _, out, _ = run(["coherence", "--ensemble", "b92", "--basis", f"file:{path}", "--output", "json"], capsys)
        assert json.loads(out)["ensembles"][0]["results"]["affinity"]["value"] > 0


class TestVerify:
    def test_measures_pass(self, capsys):
        code, out, _ = run(["verify", "--suite", "measures", "--trials", "10", "--seed", "1",
                            "--output", "json"], capsys)
        report = json.loads(out)
        assert code == 0
        assert report["passed"] == report["total"]

    def test_violation_exit_and_replay(self, capsys):
        argv = ["verify", "--suite", "coherence", "--trials", "30", "--dims", "2", "--output", "json"]
        code, out, _ = run(argv, capsys)
        assert code == 1
        failed = [p for p in json.loads(out)["properties"] if not p["pass"]]
        assert [p["property"] for p in failed] == ["C3/fidelity"]
        assert {"seed", "trial"} <= set(failed[0]["worst"])
        assert run(argv, capsys)[1] == out


class TestRejection:
    @pytest.mark.parametrize("doc", [
        {"dim": 2, "members": [{"probability": 0.5, "pure": [[1, 0], [0, 0]]}]},
        {"dim": 2, "members": [{"probability": 1.0, "pure": [[1, 0], [0, 0]],
                                "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}]},
        {"dim": 2, "members": [{"probability": 1.0}]},
        {"dim": 2, "members": [{"probability": 1.0, "pure": [[1, 0], [0, 0], [0, 0]]}]},
        {"dim": 2, "members": [{"probability": 1.0, "matrix": [[[1, 0], [1, 0]], [[0, 0], [0, 0]]]}]},
        {"dim": 2, "members": []},
    ])
    def test_bad_file_exit_2_without_output(self, doc, tmp_path, capsys):
        path = write_json(tmp_path / "bad.json", doc)
        out = tmp_path / "report.json"
        code, _, err = run(["quantumness", "--ensemble", path, "--out", str(out)], capsys)
        assert code == 2
        assert err.count("\n") == 1
        assert not out.exists()
        assert list(tmp_path.iterdir()) == [tmp_path / "bad.json"]

    def test_probabilities_renormalized_within_tolerance(self, tmp_path, capsys):
        path = write_json(tmp_path / "ok.json", {"dim": 2, "members": [
            {"probability": 0.5 + 4e-7, "pure": [[1, 0], [0, 0]]},
            {"probability": 0.5, "pure": [[0, 0], [1, 0]]}]})
        assert run(["coherence", "--ensemble", path], capsys)[0] == 0

    def test_not_json(self, tmp_path, capsys):
        path = tmp_path / "x.json"
        path.write_text("{not json")
        assert run(["coherence", "--ensemble", str(path)], capsys)[0] == 2

    @pytest.mark.parametrize("argv", [
        ["quantumness", "--ensemble", "nope"],
        ["coherence", "--ensemble", "b92", "--basis", "haar:x"],
        ["coherence", "--ensemble", "b92", "--basis", "fourier"],
        ["quantumness", "--ensemble", "b92", "--steps", "1"],
        ["verify", "--trials", "0"],
        ["verify", "--dims", "2,x"],
        ["frobnicate"],
    ])
    def test_bad_flags(self, argv, capsys):
        code, out, err = run(argv, capsys)
        assert code == 2
        assert out == ""
        assert err.startswith("ensemblage: error:")


def test_canonical_rounding():
    obj = cli.canonical({"b": 0.1 + 0.2, "a": [-0.0, float("nan"), 1 / 3]})
    assert obj == {"b": 0.3, "a": [0.0, None, 0.333333333333]}
    assert cli.dumps_json(obj).endswith("\n")
