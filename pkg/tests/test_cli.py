import json
import math
import subprocess
import sys

import numpy as np
import pytest

from possvm.cli import compare_classifiers, run
from possvm.core import KernelSpec
from possvm.dataio import load_csv, load_model


@pytest.fixture
def blobs_csv(tmp_path):
    path = tmp_path / "blobs.csv"
    assert run(["gen", "--shape", "blobs", "--n", "15", "--sep", "8", "--seed", "7",
                "--out", str(path)]) == 0
    return path


def _run(capsys, *argv):
    code = run([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGen:
    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            run(["gen", "--shape", "circles", "--n", "10", "--noise", "0.1", "--seed", "3",
                 "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()
        assert load_csv(a).size == 20

    def test_multiclass(self, tmp_path):
        p = tmp_path / "m.csv"
        assert run(["gen", "--shape", "blobs", "--classes", "3", "--out", str(p)]) == 0
        np.testing.assert_array_equal(load_csv(p).classes, [1, 2, 3])

    def test_bad_shape_is_usage_error(self, tmp_path, capsys):
        code, _, err = _run(capsys, "gen", "--shape", "moons", "--out", tmp_path / "x.csv")
        assert code == 1 and "invalid choice" in err


class TestTrainPredict:
    @pytest.mark.parametrize("method", ["prob", "poss", "svm"])
    def test_train_then_predict(self, method, blobs_csv, tmp_path, capsys):
        model = tmp_path / f"{method}.json"
        code, out, _ = _run(capsys, "train", "--method", method, "--data", blobs_csv, "--out", model)
        assert code == 0 and "converged:  yes" in out
        code, out, _ = _run(capsys, "predict", "--model", model, "--data", blobs_csv)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "accuracy: 1.000000"
        assert len(lines) == 31
        assert all(row.split(",")[-1] == row.split(",")[-2] for row in lines[1:])

    def test_json_report(self, blobs_csv, tmp_path, capsys):
        code, out, _ = _run(capsys, "train", "--method", "svm", "--kernel", "rbf", "--sigma", 2,
                            "--data", blobs_csv, "--out", tmp_path / "s.json", "--json")
        doc = json.loads(out)
        assert code == 0 and doc["converged"] and doc["kkt_violation"] == 0.0
        assert load_model(tmp_path / "s.json").kernel == KernelSpec.gaussian(2.0)

    def test_predict_unlabelled(self, blobs_csv, tmp_path, capsys):
        model = tmp_path / "p.json"
        run(["train", "--method", "poss", "--data", str(blobs_csv), "--out", str(model)])
        capsys.readouterr()
        probe = tmp_path / "probe.csv"
        probe.write_text("0,0\n10,10\n")
        code, out, _ = _run(capsys, "predict", "--model", model, "--data", probe,
                            "--out", tmp_path / "pred.csv")
        assert code == 0 and out == ""
        assert len((tmp_path / "pred.csv").read_text().splitlines()) == 2

    @pytest.mark.parametrize("extra", [
        ["--kernel", "rbf"],
        ["--kernel", "poly", "--sigma", "1"],
        ["--sigma", "1"],
        ["--C", "-1"],
    ])
    def test_usage_errors(self, extra, blobs_csv, tmp_path, capsys):
        code, _, err = _run(capsys, "train", "--method", "svm", "--data", blobs_csv,
                            "--out", tmp_path / "m.json", *extra)
        assert code == 1 and err

    @pytest.mark.parametrize("method,extra", [("prob", ["--kernel", "rbf", "--sigma", "1"]),
                                              ("prob", ["--C", "1"]), ("poss", ["--C", "hard"])])
    def test_method_specific_usage(self, method, extra, blobs_csv, tmp_path, capsys):
        code, _, _ = _run(capsys, "train", "--method", method, "--data", blobs_csv,
                          "--out", tmp_path / "m.json", *extra)
        assert code == 1

    def test_data_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,1\n3,oops,-1\n")
        code, _, err = _run(capsys, "train", "--method", "svm", "--data", bad,
                            "--out", tmp_path / "m.json")
        assert code == 2 and "line 2" in err
        code, _, _ = _run(capsys, "predict", "--model", tmp_path / "missing.json", "--data", bad)
        assert code == 2

    def test_single_class_names_missing_class(self, tmp_path, capsys):
        data = tmp_path / "one.csv"
        data.write_text("0,0,1\n1,1,1\n")
        code, _, err = _run(capsys, "train", "--method", "poss", "--data", data,
                            "--out", tmp_path / "m.json")
        assert code == 2 and "class -1" in err

    def test_non_convergence_exit_code(self, tmp_path, capsys):
        data = tmp_path / "x.csv"
        data.write_text("0,1\n1,-1\n2,1\n")
        code, out, _ = _run(capsys, "train", "--method", "svm", "--data", data,
                            "--out", tmp_path / "m.json", "--max-iter", "20")
        assert code == 3 and "converged:  no" in out


class TestCompare:
    def test_separable_agrees(self, blobs_csv, capsys):
        code, out, _ = _run(capsys, "compare", "--data", blobs_csv)
        assert code == 0 and out.rstrip().endswith("yes")
        assert "oracle margin" in out

    def test_xor_kernel(self, tmp_path, capsys):
        p = tmp_path / "xor.csv"
        run(["gen", "--shape", "xor", "--n", "2", "--noise", "0", "--out", str(p)])
        code, out, _ = _run(capsys, "compare", "--data", p, "--kernel", "rbf", "--sigma", 1)
        assert code == 0

    def test_exit_code_reflects_printed_thresholds(self, blobs_csv):
        res = compare_classifiers(load_csv(blobs_csv, two_class=True), KernelSpec.linear())
        assert res["agree"] == (res["cosine"] >= 0.999 and res["relative_margin_gap"] <= 1e-3)

    def test_deterministic_output(self, blobs_csv, capsys):
        first = _run(capsys, "compare", "--data", blobs_csv)
        assert _run(capsys, "compare", "--data", blobs_csv) == first


class TestLikelihoodAndGrid:
    def test_likelihood_product_matches_direct_sum(self, blobs_csv, tmp_path, capsys):
        model_path = tmp_path / "p.json"
        run(["train", "--method", "poss", "--data", str(blobs_csv), "--out", str(model_path)])
        capsys.readouterr()
        code, out, _ = _run(capsys, "likelihood", "--data", blobs_csv, "--model", model_path,
                            "--tnorm", "product")
        model, data = load_model(model_path), load_csv(blobs_csv)
        f = model.decision_function(data.features)
        direct = sum(-math.log1p(math.exp(-yy * ff)) for yy, ff in zip(data.labels, f))
        assert code == 0
        assert float(out.split(":")[1]) == pytest.approx(direct, rel=1e-10)

    def test_min_tnorm_equals_possibilistic_objective(self, blobs_csv, tmp_path, capsys):
        model_path = tmp_path / "p.json"
        run(["train", "--method", "poss", "--data", str(blobs_csv), "--out", str(model_path)])
        out = capsys.readouterr().out
        objective = float(out.splitlines()[0].split(":")[1])
        _, out, _ = _run(capsys, "likelihood", "--data", blobs_csv, "--model", model_path,
                         "--tnorm", "min")
        assert float(out.split(":")[1]) == pytest.approx(objective, rel=1e-9)

    def test_grid(self, blobs_csv, tmp_path, capsys):
        model = tmp_path / "s.json"
        run(["train", "--method", "svm", "--data", str(blobs_csv), "--out", str(model)])
        grid = tmp_path / "g.tsv"
        code, _, _ = _run(capsys, "grid", "--model", model, "--bounds=-5,5,-5,5",
                          "--res", 4, "--out", grid)
        lines = grid.read_text().splitlines()
        assert code == 0 and lines[0] == "x\ty\tf\tsign" and len(lines) == 17

    def test_bad_bounds(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "grid", "--model", "m.json", "--bounds", "1,0,0,1",
                          "--out", tmp_path / "g.tsv")
        assert code == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "possvm", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "compare" in out.stdout
