"""Confusion counts, kappa, ROC shape, trapezoid-vs-pair AUC, report files."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarepred.dataset import DatasetError
from rarepred.evaluate import (
    ConfusionMatrix,
    auc,
    auc_pair_count,
    confusion,
    evaluate_scores,
    metrics,
    roc,
    write_report,
)


class TestConfusionAndMetrics:
    def test_confusion_counts(self):
        y = np.array([1, 1, 0, 0, 1, 0])
        p = np.array([1, 0, 1, 0, 1, 0])
        cm = confusion(y, p)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (2, 1, 1, 2)

    def test_metrics_oracle(self):
        # worked example: 45/5/15/35 gives chance agreement exactly 0.5
        m = metrics(ConfusionMatrix(tp=45, fn=5, fp=15, tn=35))
        assert math.isclose(m.accuracy, 0.8)
        assert math.isclose(m.kappa, 0.6)
        assert math.isclose(m.sensitivity, 0.9)
        assert math.isclose(m.specificity, 0.7)
        assert m.undefined == ()

    def test_no_positives_flags_sensitivity(self):
        m = metrics(ConfusionMatrix(tp=0, fn=0, fp=2, tn=8))
        assert math.isnan(m.sensitivity)
        assert "sensitivity" in m.undefined
        assert math.isclose(m.specificity, 0.8)

    def test_degenerate_kappa_flagged(self):
        # one class, matching predictions: expected agreement is 1
        m = metrics(ConfusionMatrix(tp=0, fn=0, fp=0, tn=10))
        assert math.isnan(m.kappa)
        assert "kappa" in m.undefined
        assert m.accuracy == 1.0

    def test_kappa_zero_for_chance(self):
        # predictions independent of labels at matched rates
        m = metrics(ConfusionMatrix(tp=25, fn=25, fp=25, tn=25))
        assert math.isclose(m.kappa, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(DatasetError):
            metrics(ConfusionMatrix(0, 0, 0, 0))

    def test_nonbinary_rejected(self):
        with pytest.raises(DatasetError):
            confusion(np.array([0, 2]), np.array([0, 1]))


class TestRoc:
    def test_anchors_and_monotone(self):
        y = np.array([1, 0, 1, 0, 1])
        s = np.array([0.9, 0.1, 0.8, 0.4, 0.35])
        curve = roc(y, s)
        assert curve[0, 0] == math.inf
        assert (curve[0, 1], curve[0, 2]) == (0.0, 0.0)
        assert (curve[-1, 1], curve[-1, 2]) == (1.0, 1.0)
        assert np.all(np.diff(curve[:, 1]) >= 0)
        assert np.all(np.diff(curve[:, 2]) >= 0)
        # thresholds strictly descending after the anchor
        assert np.all(np.diff(curve[1:, 0]) < 0)

    def test_ties_grouped_single_step(self):
        y = np.array([1, 0, 1, 0])
        s = np.array([0.5, 0.5, 0.9, 0.1])
        curve = roc(y, s)
        # unique thresholds: inf, 0.9, 0.5, 0.1 -> 4 rows
        assert curve.shape == (4, 3)
        # the tied 0.5 group moves both rates at once
        np.testing.assert_allclose(curve[2], [0.5, 0.5, 1.0])

    def test_auc_oracle_three_quarters(self):
        # pos {0.9, 0.8}, neg {0.85, 0.3}: 3 of 4 pairs ordered correctly
        y = np.array([1, 1, 0, 0])
        s = np.array([0.9, 0.8, 0.85, 0.3])
        assert math.isclose(auc(y, s), 0.75)
        assert math.isclose(auc_pair_count(y, s), 0.75)

    def test_perfect_and_reversed(self):
        y = np.array([1, 1, 0, 0])
        assert auc(y, np.array([0.9, 0.8, 0.2, 0.1])) == 1.0
        assert auc(y, np.array([0.1, 0.2, 0.8, 0.9])) == 0.0

    def test_all_tied_half(self):
        y = np.array([1, 0, 1, 0])
        s = np.full(4, 0.5)
        assert math.isclose(auc(y, s), 0.5)

    def test_single_class_rejected(self):
        with pytest.raises(DatasetError):
            roc(np.ones(3, dtype=int), np.array([0.1, 0.2, 0.3]))

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 120), st.booleans())
    def test_trapezoid_equals_pair_count(self, seed, n, quantize):
        rng = np.random.Generator(np.random.PCG64(seed))
        y = rng.integers(0, 2, size=n)
        if y.sum() == 0:
            y[0] = 1
        if y.sum() == n:
            y[0] = 0
        s = rng.random(n)
        if quantize:
            s = np.round(s, 1)  # force heavy ties
        assert abs(auc(y, s) - auc_pair_count(y, s)) < 1e-10


class TestReport:
    def make_eval(self, name="Model A", importance=None):
        y = np.array([1, 1, 0, 0, 1, 0, 0, 0])
        s = np.array([0.9, 0.4, 0.6, 0.2, 0.8, 0.1, 0.3, 0.55])
        return evaluate_scores(name, y, s, importance=importance)

    def test_threshold_semantics(self):
        y = np.array([1, 0])
        ev = evaluate_scores("m", y, np.array([0.5, 0.49]))
        # score exactly at threshold counts as positive
        assert ev.cm.tp == 1 and ev.cm.fp == 0 and ev.cm.tn == 1

    def test_bundle_files(self, tmp_path):
        evs = [self.make_eval("Logit"), self.make_eval("Forest", {"a": 0.7, "b": 0.3})]
        written = write_report(str(tmp_path), evs)
        assert "metrics.csv" in written
        assert "roc_logit.csv" in written and "confusion_forest.csv" in written
        assert "importance_forest.csv" in written
        assert "importance_logit.csv" not in written
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        assert lines[0] == "metric,logit,forest"
        assert [ln.split(",")[0] for ln in lines[1:]] == [
            "Accuracy",
            "Kappa",
            "Sensitivity",
            "Specificity",
            "AUC",
        ]

    def test_roc_csv_layout(self, tmp_path):
        write_report(str(tmp_path), [self.make_eval("m")])
        lines = (tmp_path / "roc_m.csv").read_text().splitlines()
        assert lines[0] == "threshold,fpr,tpr"
        assert lines[1] == "inf,0.0,0.0"
        assert lines[-1].endswith(",1.0,1.0")

    def test_confusion_csv_layout(self, tmp_path):
        write_report(str(tmp_path), [self.make_eval("m")])
        lines = (tmp_path / "confusion_m.csv").read_text().splitlines()
        assert lines[0] == ",predicted_1,predicted_0"
        assert lines[1].startswith("actual_1,")
        assert lines[2].startswith("actual_0,")

    def test_importance_sorted_desc(self, tmp_path):
        write_report(
            str(tmp_path),
            [self.make_eval("m", {"zeta": 0.5, "alpha": 0.3, "mid": 0.2})],
        )
        lines = (tmp_path / "importance_m.csv").read_text().splitlines()
        assert lines[0] == "feature,weight"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["zeta", "alpha", "mid"]

    def test_deterministic_bytes(self, tmp_path):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        for d in (d1, d2):
            write_report(str(d), [self.make_eval("m", {"a": 1.0})])
        for name in ("metrics.csv", "roc_m.csv", "confusion_m.csv", "importance_m.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_name_collision_rejected(self, tmp_path):
        with pytest.raises(DatasetError, match="collide"):
            write_report(str(tmp_path), [self.make_eval("My Model"), self.make_eval("my-model")])
