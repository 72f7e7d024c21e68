import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sepfda import io
from sepfda.cli import run
from sepfda.simulate import make_sigma_row, ou_kernel, sample_process


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    args = ["simulate", "--n", "60", "--p", "2", "--q", "40", "--kernel", "ou", "--eps", "0.1",
            "--outlier", "shift", "--magnitude", "15", "--seed", "3", "--out", str(d / "sim.csv")]
    assert run(args) == 0
    assert run(["fit", "--data", str(d / "sim.csv"), "--m", "8", "--estimator", "mmcd", "--seed", "1",
                "--n-subsets", "50", "--out", str(d / "fit.json")]) == 0
    return d


def test_simulate_writes_data_labels_truth(sim):
    with open(sim / "sim.csv") as fh:
        assert fh.readline().strip() == "sample_id,coordinate,time,value"
    labels = io.read_labels(sim / "sim.labels.csv")
    assert sum(labels.values()) == 6
    truth = json.loads((sim / "sim.truth.json").read_text())
    assert truth["kernel"] == {"kind": "ou", "variance": 0.3, "length": 0.3}


def test_csv_round_trip_is_lossless(sim, tmp_path):
    curves = io.read_curves(sim / "sim.csv")
    io.write_curves(curves, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == (sim / "sim.csv").read_bytes()
    # the values match an in-memory draw with the same seed
    rng = np.random.default_rng(3)
    S = make_sigma_row(2, rng)
    ref = sample_process(60, 2, np.linspace(0, 1, 40), S, ou_kernel(), rng=rng)
    clean = ~np.array(list(io.read_labels(sim / "sim.labels.csv").values()))
    np.testing.assert_allclose(curves.values[clean], ref.values[clean], rtol=1e-15)


def test_fit_document_fields(sim):
    doc = json.loads((sim / "fit.json").read_text())
    for key in ["mean_coefficients", "sigma_row", "sigma_col", "scale_convention", "h_subset",
                "distances", "cutoff", "flags", "config_echo"]:
        assert key in doc
    assert np.array(doc["mean_coefficients"]).shape == (8, 2)
    assert len(doc["h_subset"]) == 30
    assert np.trace(doc["sigma_row"]) == pytest.approx(2)


def test_outputs_are_byte_identical(sim, tmp_path):
    args = ["fit", "--data", str(sim / "sim.csv"), "--m", "8", "--estimator", "mmcd", "--seed", "1",
            "--n-subsets", "50", "--out", str(tmp_path / "fit.json")]
    assert run(args) == 0
    assert (tmp_path / "fit.json").read_bytes() == (sim / "fit.json").read_bytes()
    assert run(["simulate", "--n", "60", "--p", "2", "--q", "40", "--eps", "0.1", "--outlier", "shift",
                "--seed", "3", "--out", str(tmp_path / "sim.csv")]) == 0
    assert (tmp_path / "sim.csv").read_bytes() == (sim / "sim.csv").read_bytes()


def test_evaluate_reports_recall(sim, tmp_path):
    out = tmp_path / "report.json"
    assert run(["evaluate", "--fit", str(sim / "fit.json"), "--labels", str(sim / "sim.labels.csv"),
                "--truth", str(sim / "sim.truth.json"), "--benchmark-cov-error", "0.01", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["recall"] == 1.0 and rep["auc"] > 0.95
    assert rep["cov_error"] >= 0 and rep["relative_cov_error"] == pytest.approx(rep["cov_error"] / 0.01)


def test_shapley_single_interval_sums_to_distance(sim, tmp_path):
    out = tmp_path / "shap.csv"
    assert run(["shapley", "--data", str(sim / "sim.csv"), "--fit", str(sim / "fit.json"),
                "--intervals", "1", "--out", str(out)]) == 0
    doc = json.loads((sim / "fit.json").read_text())
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["sample_id", "coordinate", "interval_index", "contribution", "normalized_contribution"]
    totals = {}
    for r in rows:
        totals[r["sample_id"]] = totals.get(r["sample_id"], 0.0) + float(r["contribution"])
    for sid, d in doc["distances"].items():
        assert totals[sid] == pytest.approx(d, rel=1e-9)


def test_shapley_several_intervals_normalized(sim, tmp_path):
    out = tmp_path / "shap.csv"
    assert run(["shapley", "--data", str(sim / "sim.csv"), "--fit", str(sim / "fit.json"),
                "--intervals", "5", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = [r for r in csv.DictReader(fh) if r["sample_id"] == "s01"]
    assert len(rows) == 10
    assert sum(float(r["normalized_contribution"]) for r in rows) == pytest.approx(1, rel=1e-9)


def test_distance_and_qq(sim, tmp_path):
    assert run(["distance", "--data", str(sim / "sim.csv"), "--fit", str(sim / "fit.json"),
                "--out", str(tmp_path / "d.csv"), "--emit-qq", str(tmp_path / "qq.csv")]) == 0
    doc = json.loads((sim / "fit.json").read_text())
    with open(tmp_path / "d.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        assert float(r["squared_distance"]) == pytest.approx(doc["distances"][r["sample_id"]], rel=1e-12)
    qq = np.loadtxt(tmp_path / "qq.csv", delimiter=",", skiprows=1)
    assert qq.shape == (60, 2) and np.all(np.diff(qq, axis=0) >= 0)
    # truncated distances
    assert run(["distance", "--data", str(sim / "sim.csv"), "--fit", str(sim / "fit.json"),
                "--truncation", "4", "--out", str(tmp_path / "d4.csv")]) == 0


def test_fpca_output(sim, tmp_path):
    out = tmp_path / "fpca.json"
    assert run(["fpca", "--fit", str(sim / "fit.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["kernel_eigenvalues"]) == 8 and len(doc["row_eigenvalues"]) == 2
    assert len(doc["product_eigenvalues"]) == 16
    assert np.array(doc["eigenfunction_coefficients"]).shape == (8, 8)


def test_smooth_output(sim, tmp_path):
    out = tmp_path / "coef.csv"
    assert run(["smooth", "--data", str(sim / "sim.csv"), "--m", "6", "--out", str(out)]) == 0
    with open(out) as fh:
        assert fh.readline().strip() == "sample_id,coordinate,basis_index,coefficient"
        assert sum(1 for _ in fh) == 60 * 2 * 6


def test_raw_mode_fit_and_shapley(sim, tmp_path):
    fit = tmp_path / "raw.json"
    assert run(["fit", "--data", str(sim / "sim.csv"), "--mode", "raw", "--estimator", "mmle", "--out", str(fit)]) == 0
    doc = json.loads(fit.read_text())
    assert np.array(doc["sigma_col"]).shape == (40, 40)
    out = tmp_path / "shap.csv"
    assert run(["shapley", "--data", str(sim / "sim.csv"), "--fit", str(fit), "--intervals", "3", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    total = sum(float(r["contribution"]) for r in rows if r["sample_id"] == "s01")
    assert total == pytest.approx(doc["distances"]["s01"], rel=1e-9)


def test_single_sample_is_validation_error(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("sample_id,coordinate,time,value\n" + "".join(f"a,1,{t / 10},{t}\n" for t in range(11)))
    assert run(["fit", "--data", str(path), "--m", "4", "--estimator", "mmle"]) == 2
    assert "samples" in capsys.readouterr().err


def test_malformed_csv_names_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("sample_id,coordinate,time,value\na,1,0.0,1.0\na,1,0.5,oops\n")
    assert run(["fit", "--data", str(path), "--estimator", "mmle"]) == 2
    assert ":3:" in capsys.readouterr().err


def test_ragged_grid_rejected(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("sample_id,coordinate,time,value\na,1,0.0,1.0\na,1,1.0,1.0\nb,1,0.0,1.0\nb,1,0.5,1.0\n")
    assert run(["fit", "--data", str(path), "--estimator", "mmle"]) == 2


def test_bad_header_and_flags(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("id,coord,t,v\n")
    assert run(["fit", "--data", str(path)]) == 2
    assert run(["fit", "--bogus"]) == 2
    assert run(["frobnicate"]) == 2


def test_seed_required(sim):
    assert run(["simulate", "--out", "x.csv"]) == 2
    assert run(["fit", "--data", str(sim / "sim.csv"), "--estimator", "mmcd"]) == 2


def test_numerical_failure_exit_code(tmp_path):
    path = tmp_path / "flat.csv"
    rows = "".join(f"s{i},{k},{t / 9},1.0\n" for i in range(8) for k in (1, 2) for t in range(10))
    path.write_text("sample_id,coordinate,time,value\n" + rows)
    assert run(["fit", "--data", str(path), "--m", "4", "--estimator", "mmle"]) == 3


def test_module_entry_point(sim, tmp_path):
    out = tmp_path / "fpca.json"
    res = subprocess.run([sys.executable, "-m", "sepfda", "fpca", "--fit", str(sim / "fit.json"), "--out", str(out)])
    assert res.returncode == 0 and out.exists()
