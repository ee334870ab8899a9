import json

import numpy as np
import pytest

import occml


@pytest.fixture(scope="module")
def data():
    # The generator is a sticky Markov chain; this seed covers all four classes.
    d = occml.generate_synthetic(1000, 1)
    return d, np.asarray(d.features()), np.asarray(d.labels())


def test_dataset_basics(data):
    d, x, y = data
    assert len(d) == 1000
    assert x.shape == (1000, 16)
    assert set(y.tolist()) == {0, 1, 2, 3}
    assert occml.FEATURE_NAMES[14] == "S6_PIR"
    assert d == occml.generate_synthetic(1000, 1)
    train, test = occml.split(d, 0.3, 1)
    assert len(train) + len(test) == 1000
    assert not set(train) & set(test)


def test_parse_errors_become_python_exceptions():
    with pytest.raises(occml.OccmlError):
        occml.parse_dataset("not,a,header\n1,2,3\n")


def test_fit_predict_roundtrip(data):
    _, x, y = data
    m = occml.fit("rf", x, y, params={"n_trees": 10}, seed=4)
    p = np.asarray(m.predict_proba(x))
    assert p.shape == (1000, 4)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert list(m.predict(x)) == list(p.argmax(axis=1))
    again = occml.model_from_json(m.to_json())
    np.testing.assert_array_equal(np.asarray(again.predict_proba(x)), p)
    with pytest.raises(occml.OccmlError):
        occml.fit("rf", x, y, params={"n_tree": 3})


def test_metrics(data):
    _, x, y = data
    m = occml.fit("majority", x, y)
    report = occml.evaluate(np.asarray(m.predict_proba(x)), y)
    assert report["balanced_accuracy_macro"] == 0.25
    assert report["weighted_auc"] is None
    assert occml.binary_auc([0.1, 0.4, 0.35, 0.8], [False, False, True, True]) == 0.75


def test_tune_counts(data):
    _, x, y = data
    result = occml.tune("lda", x, y, profile="full", k=5, seed=2)
    assert result["total_fits"] == 15
    assert len(result["candidates"]) == 3
    grids = occml.default_grids()
    assert len(grids["full"]["xgboost"]["max_depth"]) == 4


def test_explain_efficiency(data):
    _, x, y = data
    m = occml.fit("xgboost", x, y, params={"n_rounds": 10}, seed=1)
    rows, bg = x[:3], x[100:120]
    e = occml.explain(m, rows, bg, method="sampled", n_pairs=4, seed=7)
    base_gap = np.asarray(m.predict_proba(rows)) - np.asarray(m.predict_proba(bg)).mean(axis=0)
    for i, s in enumerate(e["samples"]):
        np.testing.assert_allclose(np.asarray(s["phi"]).sum(axis=0), base_gap[i], atol=1e-9)
    assert e["summary"][0]["mean_abs_shap"] >= e["summary"][-1]["mean_abs_shap"]


def test_eda_helpers(data):
    d, _, _ = data
    assert occml.lag1_autocorrelation([1, 2, 3, 4, 5]) == pytest.approx(0.4)
    assert occml.pearson([1, 2, 3], [1, 1, 1]) is None
    intercept, slope = occml.ols_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert (intercept, slope) == pytest.approx((1.0, 2.0))
    report = occml.eda(d)
    assert len(report["stats"]) == 16


def test_pipeline_commands(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "synthetic": {"n_rows": 1000, "seed": 1},
        "folds": 3,
        "models": ["majority", "lda"],
        "grids": {"lda": {"shrinkage": [0.1]}},
        "background_size": 5,
        "explain_samples": 2,
        "shap_pairs": 2,
        "output_dir": "out",
    }))
    rc, _, err = occml.run("evaluate", cfg)
    assert rc == 4, err
    for cmd in ("eda", "tune", "evaluate", "explain", "report"):
        rc, out, err = occml.run(cmd, cfg, models=["lda"] if cmd == "explain" else ())
        assert rc == 0, (cmd, err)
    assert (tmp_path / "out" / "report.md").exists()
    table = (tmp_path / "out" / "results_table.csv").read_text().splitlines()
    assert table[0] == "model,weighted_f1,weighted_auc,balanced_accuracy,best"
    assert len(table) == 3
