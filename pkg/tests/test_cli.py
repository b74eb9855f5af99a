import json
import math

import pandas as pd
import pytest

from main import main


def write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def sample(tmp_path):
    """Separated two-class sample: N=600, J=12."""
    out = tmp_path / "R.csv"
    code = main(["simulate", "--n", "600", "--j", "12", "--l", "2", "--theta-pool", "0.1,0.9",
                 "--seed", "3", "--out", str(out), "--truth", str(tmp_path / "truth.json")])
    assert code == 0
    return out


def test_simulate_all_ones(tmp_path):
    out = tmp_path / "R.csv"
    assert main(["simulate", "--n", "5", "--j", "4", "--l", "2", "--theta-pool", "1.0", "--out", str(out)]) == 0
    assert out.read_text() == "1,1,1,1\n" * 5


def test_simulate_is_deterministic(tmp_path, sample):
    again = tmp_path / "again.csv"
    main(["simulate", "--n", "600", "--j", "12", "--l", "2", "--theta-pool", "0.1,0.9",
          "--seed", "3", "--out", str(again)])
    assert again.read_text() == sample.read_text()
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["model"] == "random"
    assert truth["seed"] == 3
    assert len(truth["theta"]) == 12


def test_simulate_rejects_too_few_items(tmp_path, capsys):
    code = main(["simulate", "--n", "10", "--j", "2", "--l", "1", "--out", str(tmp_path / "R.csv")])
    assert code == 2
    assert "J >= 3" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    assert main(["frobnicate"]) == 2


def test_fit_em_init_needs_init(sample):
    assert main(["fit", "--data", str(sample), "--l", "2", "--method", "em-init"]) == 2


def test_fit_em_init_from_truth(tmp_path, sample):
    out = tmp_path / "fit.json"
    code = main(["fit", "--data", str(sample), "--l", "2", "--method", "em-true",
                 "--init", str(tmp_path / "truth.json"), "--out", str(out)])
    assert code == 0
    fit = json.loads(out.read_text())
    assert fit["method"] == "em-init"
    assert fit["converged"] is True


def test_fit_init_class_count_must_match(tmp_path, sample, capsys):
    code = main(["fit", "--data", str(sample), "--l", "3", "--method", "em-init",
                 "--init", str(tmp_path / "truth.json")])
    assert code == 2
    assert "--init has 2 classes" in capsys.readouterr().err


def test_tensor_em_improves_on_tensor(tmp_path, sample):
    results = {}
    for method in ("tensor", "tensor-em"):
        out = tmp_path / f"{method}.json"
        assert main(["fit", "--data", str(sample), "--l", "2", "--method", method,
                     "--seed", "1", "--out", str(out), "--no-timing"]) == 0
        results[method] = json.loads(out.read_text())
    assert results["tensor-em"]["loglik"] >= results["tensor"]["loglik"]
    assert results["tensor-em"]["runtime_ms"] == 0.0
    assert sum(results["tensor-em"]["p"]) == pytest.approx(1.0)


def test_fit_prints_json_without_out(sample, capsys):
    assert main(["fit", "--data", str(sample), "--l", "2", "--model", "fixed"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert len(fit["z"]) == 600
    assert set(fit["z"]) <= {1, 2}


def test_fit_non_binary_data_exits_3(tmp_path):
    data = tmp_path / "R.csv"
    data.write_text("0,1,2\n1,0,1\n")
    assert main(["fit", "--data", str(data), "--l", "1"]) == 3


def test_fit_missing_file_exits_2(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "absent.csv"), "--l", "2"]) == 2


@pytest.fixture
def eight_subject_files(tmp_path):
    theta = [[0.2, 0.8], [0.7, 0.3], [0.9, 0.1]]
    truth = write(tmp_path / "truth.json", {"model": "fixed", "theta": theta, "z": [1, 1, 1, 1, 2, 1, 2, 2]})
    est = write(tmp_path / "est.json", {"theta": theta, "z": [1, 1, 1, 1, 1, 2, 2, 2]})
    return truth, est


def test_eval_identical(eight_subject_files, capsys):
    truth, _ = eight_subject_files
    assert main(["eval", "--truth", truth, "--est", truth]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["mse"] == 0.0
    assert result["n_errors"] == 0
    assert result["permutation"] == [1, 2]


def test_eval_clustering_errors(eight_subject_files, capsys):
    truth, est = eight_subject_files
    assert main(["eval", "--truth", truth, "--est", est, "--metric", "errors"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["n_errors"] == 2
    assert result["error_rate"] is None
    assert result["mse"] is None


def test_eval_reports_permutation(tmp_path, capsys):
    truth = write(tmp_path / "truth.json", {"theta": [[0.2, 0.8], [0.6, 0.1]], "p": [0.5, 0.5]})
    est = write(tmp_path / "est.json", {"theta": [[0.8, 0.2], [0.1, 0.6]], "p": [0.5, 0.5]})
    assert main(["eval", "--truth", truth, "--est", est, "--metric", "mse"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["mse"] == 0.0
    assert result["permutation"] == [2, 1]
    assert result["n_errors"] is None


@pytest.fixture
def key(tmp_path):
    path = tmp_path / "key.csv"
    path.write_text("1,+\n2,+\n3,+\n4,-\n5,-\n6,-\n")
    return str(path)


def test_ingest(tmp_path, key):
    raw = tmp_path / "raw.csv"
    raw.write_text("q1,q2,q3,q4,q5,q6\n4,5,7,1,3,4\n")
    out = tmp_path / "R.csv"
    assert main(["ingest", "--raw", str(raw), "--has-header", "--key", key, "--out", str(out)]) == 0
    assert out.read_text() == "0,1,1,1,1,0\n"


def test_ingest_out_of_range_exits_3(tmp_path, key):
    raw = tmp_path / "raw.csv"
    raw.write_text("4,5,7,0,3,4\n")
    assert main(["ingest", "--raw", str(raw), "--key", key, "--out", str(tmp_path / "R.csv")]) == 3


def test_profile_absolute(tmp_path):
    est = write(tmp_path / "est.json", {"theta": [[0.3, 0.5, 0.7]], "p": [0.2, 0.3, 0.5]})
    groups = tmp_path / "groups.csv"
    groups.write_text("item_index,group\n1,openness\n")
    out = tmp_path / "profile.csv"
    means = tmp_path / "means.csv"
    assert main(["profile", "--est", est, "--groups", str(groups), "--out", str(out),
                 "--means-out", str(means)]) == 0
    assert out.read_text().splitlines() == ["group,1,2,3", "openness,low,medium,high"]
    assert len(pd.read_csv(means)) == 3


def test_select_single_candidate(tmp_path, sample, capsys):
    out = tmp_path / "gic.csv"
    assert main(["select", "--data", str(sample), "--l-min", "2", "--l-max", "2", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "selected_L=2"
    assert len(pd.read_csv(out)) == 1


def test_select_report_is_rederivable(tmp_path, sample, capsys):
    out = tmp_path / "gic.csv"
    assert main(["select", "--data", str(sample), "--l-min", "1", "--l-max", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "selected_L=2"
    frame = pd.read_csv(out)
    for row in frame.itertuples():
        assert row.gic1 == pytest.approx(-2 * row.loglik + math.log(600) * row.dim, rel=1e-9)
    assert frame.loc[frame["selected"], "L"].tolist() == [2]


def test_select_bad_range_exits_2(sample):
    assert main(["select", "--data", str(sample), "--l-min", "3", "--l-max", "2"]) == 2


def test_bad_config_exits_2(tmp_path, sample, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("em:\n  max_iters: 0\n")
    assert main(["--config", str(config), "fit", "--data", str(sample), "--l", "2"]) == 2
    assert "Configuration error" in capsys.readouterr().err


def test_benchmark_table(tmp_path):
    out = tmp_path / "bench.csv"
    code = main(["benchmark", "--n", "200", "--j", "9", "--l", "2", "--theta-pool", "0.1,0.9",
                 "--methods", "tensor-em,em-random", "--reps", "2", "--out", str(out), "--no-timing"])
    assert code == 0
    table = pd.read_csv(out)
    assert list(table.columns)[:7] == ["setting_id", "method", "rep", "mse", "loglik", "runtime_ms", "error_rate"]
    assert len(table) == 4
    assert (table["runtime_ms"] == 0.0).all()
