import json

import pytest

from cotq.cli import cli
from cotq.dataio import load_csv


@pytest.fixture()
def dataset_csv(tmp_path):
    path = tmp_path / "data.csv"
    code = cli(["simulate", "spherical", "--n", "500", "--seed", "3", "--out", str(path)])
    assert code == 0
    return path


class TestSimulate:
    def test_repeatable_files(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli(["simulate", "spherical", "--n", "100", "--seed", "7", "--out", str(p1)]) == 0
        assert cli(["simulate", "spherical", "--n", "100", "--seed", "7", "--out", str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_loadable(self, dataset_csv):
        ds = load_csv(dataset_csv, ["x"], ["y1", "y2"])
        assert ds.n == 500

    def test_model_choice_enforced(self, capsys):
        assert cli(["simulate", "wrong", "--n", "10"]) == 1


class TestFit:
    def test_end_to_end_and_determinism(self, tmp_path, dataset_csv):
        args = [
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--scheme", "knn", "--k", "100",
            "--taus", "0.2,0.6", "--queries", "0;1",
        ]
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli(args + ["--out", str(out1)]) == 0
        assert cli(args + ["--out", str(out2), "--threads", "2"]) == 0
        for name in sorted(p.name for p in out1.iterdir()):
            if name.endswith((".csv", ".json")):
                assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_tau_out_of_bounds_exit_1(self, dataset_csv, capsys):
        code = cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--taus", "1.5", "--queries", "0",
        ])
        assert code == 1
        assert "(0, 1)" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        code = cli([
            "fit", "--data", str(tmp_path / "absent.csv"),
            "--x-columns", "x", "--y-columns", "y1,y2",
        ])
        assert code == 2

    def test_unknown_column_exit_2(self, dataset_csv):
        code = cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "nope", "--y-columns", "y1,y2",
        ])
        assert code == 2

    def test_config_file_matches_flags(self, tmp_path, dataset_csv):
        flags_out = tmp_path / "flags"
        assert cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--scheme", "knn", "--k", "100",
            "--taus", "0.2,0.6", "--queries", "0;1",
            "--out", str(flags_out),
        ]) == 0
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "data": str(dataset_csv),
            "x_columns": ["x"],
            "y_columns": ["y1", "y2"],
            "weights": {"scheme": "knn", "k": 100},
            "taus": [0.2, 0.6],
            "queries": [[0.0], [1.0]],
        }))
        cfg_out = tmp_path / "cfg"
        assert cli(["fit", "--config", str(cfg), "--out", str(cfg_out)]) == 0
        for p in sorted(flags_out.iterdir()):
            if p.suffix in (".csv", ".json"):
                assert (cfg_out / p.name).read_bytes() == p.read_bytes()

    def test_config_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"data": "x.csv", "x_columns": ["x"],
                                   "y_columns": ["y"], "bogus": 1}))
        assert cli(["fit", "--config", str(cfg)]) == 1

    def test_auto_queries(self, tmp_path, dataset_csv):
        out = tmp_path / "auto"
        code = cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--k", "80", "--taus", "0.4", "--queries", "auto:3",
            "--out", str(out),
        ])
        assert code == 0
        assert (out / "contours.json").exists()


class TestContours:
    def test_json_to_stdout(self, dataset_csv, capsys):
        code = cli([
            "contours", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--k", "100", "--taus", "0.3,0.7", "--at", "0.5",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["schema"] == "cotq/1"
        assert [r["tau"] for r in doc["results"]] == [0.3, 0.7]
        assert all("median" in r for r in doc["results"])


class TestValidate:
    def test_coverage_report_and_determinism(self, tmp_path, capsys):
        args = [
            "validate", "--suite", "coverage", "--model", "spherical",
            "--n", "400", "--N", "100", "--mc", "300",
            "--taus", "0.2,0.4", "--queries", "0,1", "--seed", "5",
        ]
        out1, out2 = tmp_path / "v1", tmp_path / "v2"
        assert cli(args + ["--out", str(out1)]) == 0
        assert cli(args + ["--out", str(out2)]) == 0
        for name in ("coverage.csv", "coverage.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        doc = json.loads((out1 / "coverage.json").read_text())
        assert len(doc["rows"]) == 4

    def test_consistency_suite(self, tmp_path):
        out = tmp_path / "cons"
        code = cli([
            "validate", "--suite", "consistency", "--model", "spherical",
            "--n-list", "300,1500", "--taus", "0.4", "--seeds", "0,1",
            "--out", str(out),
        ])
        assert code == 0
        doc = json.loads((out / "consistency.json").read_text())
        assert set(doc["median_by_n"]) == {"300", "1500"}

    def test_consistency_unsupported_model_exit(self, tmp_path):
        code = cli([
            "validate", "--suite", "consistency", "--model", "banana",
            "--n-list", "100", "--out", str(tmp_path / "x"),
        ])
        assert code == 1


class TestUsage:
    def test_no_command_exits_1(self, capsys):
        assert cli([]) == 1

    def test_kernel_scheme_requires_h(self, dataset_csv):
        code = cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--scheme", "gaussian",
        ])
        assert code == 1

    def test_bad_query_string(self, dataset_csv):
        code = cli([
            "fit", "--data", str(dataset_csv),
            "--x-columns", "x", "--y-columns", "y1,y2",
            "--queries", "abc",
        ])
        assert code == 1
