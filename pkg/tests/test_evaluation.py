"""
Evaluation Tests
================

혼동 행렬 지표, ROC/AUC, 보고서 파일.
"""
import numpy as np
import pytest

from acmca.errors import UsageError
from acmca.evaluation import (
    ConfusionMatrix, build_report, compare_report, confusion, macro_roc, metrics, roc_auc, roc_curve,
    write_report, write_sweep_report,
)
from utils import read_csv_with_metadata


def pairwise_auc(scores, positive):
    """P(양성 점수 > 음성 점수) + 0.5·P(동점)"""
    pos = scores[positive]
    neg = scores[~positive]
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (greater + 0.5 * ties) / (len(pos) * len(neg))


@pytest.fixture
def known_confusion():
    """class 0 one-vs-rest: TP=8, TN=85, FP=5, FN=2"""
    return ConfusionMatrix(np.array([
        [8, 2, 0],
        [5, 45, 0],
        [0, 0, 40],
    ]))


@pytest.fixture
def probabilities(rng):
    labels = np.repeat([0, 1, 2], 10)
    logits = rng.normal(size=(30, 3))
    logits[np.arange(30), labels] += 1.0
    proba = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    return proba, labels


# =============================================================================
# 지표
# =============================================================================

class TestMetrics:

    def test_one_vs_rest_counts(self, known_confusion):
        assert known_confusion.one_vs_rest(0) == (8, 85, 5, 2)

    def test_class_metrics(self, known_confusion):
        m = metrics(known_confusion).per_class["CN"]
        assert m.accuracy == pytest.approx(0.93)
        assert m.recall == pytest.approx(0.8)
        assert m.specificity == pytest.approx(85 / 90)
        assert m.f1 == pytest.approx(16 / 23)

    def test_macro_and_overall(self, known_confusion):
        report = metrics(known_confusion)
        per = report.per_class.values()
        assert report.macro.recall == pytest.approx(np.mean([m.recall for m in per]))
        assert report.overall_accuracy == pytest.approx(0.93)
        assert report.flags == []

    def test_absent_class_flagged(self):
        """실제로도 예측으로도 없는 클래스: 분모 0 칸은 0과 플래그"""
        report = metrics(confusion([0, 1, 0, 1], [0, 1, 1, 1]))
        assert report.per_class["AD"].recall == 0.0
        assert "recall[AD]" in report.flags
        assert "f1[AD]" in report.flags

    def test_confusion_checks(self):
        with pytest.raises(UsageError):
            confusion([0, 1], [0])
        with pytest.raises(UsageError):
            confusion([0, 3], [0, 1])
        with pytest.raises(UsageError):
            metrics(ConfusionMatrix(np.zeros((3, 3), dtype=int)))


# =============================================================================
# ROC / AUC
# =============================================================================

class TestRoc:

    def test_auc_matches_pairwise(self, rng):
        """동점이 섞인 점수에서도 쌍 비교 AUC와 일치"""
        scores = rng.integers(0, 6, size=40).astype(float)
        positive = rng.random(40) < 0.4
        curve = roc_curve(scores, positive)
        assert curve.auc == pytest.approx(pairwise_auc(scores, positive))

    def test_endpoints_and_monotonic(self, rng):
        curve = roc_curve(rng.random(25), rng.random(25) < 0.5)
        assert curve.points()[0] == (0.0, 0.0)
        assert curve.points()[-1] == (1.0, 1.0)
        assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)

    def test_perfect_and_inverted(self):
        positive = np.array([True, True, False, False])
        assert roc_curve([0.9, 0.8, 0.2, 0.1], positive).auc == pytest.approx(1.0)
        assert roc_curve([0.1, 0.2, 0.8, 0.9], positive).auc == pytest.approx(0.0)

    def test_single_class_undefined(self):
        report = roc_auc(np.full((4, 3), 1 / 3), [0, 0, 1, 1])
        assert report.undefined == ["AD"]
        assert not report.curves["AD"].defined

    def test_macro_curve(self, probabilities):
        proba, labels = probabilities
        report = roc_auc(proba, labels)
        curve = macro_roc(list(report.curves.values()))
        assert curve.points()[0] == (0.0, 0.0)
        assert curve.points()[-1] == (1.0, 1.0)
        assert 0.0 <= curve.auc <= 1.0


# =============================================================================
# 보고서
# =============================================================================

class TestReports:

    def test_build_and_write(self, tmp_path, probabilities):
        proba, labels = probabilities
        report = build_report("acmca", proba, labels)
        assert report.n_samples == 30
        paths = write_report(report, tmp_path)
        metadata, frame = read_csv_with_metadata(paths["metrics"])
        assert frame["scope"].tolist() == ["CN", "MCI", "AD", "macro", "overall"]
        assert metadata["variant"] == "acmca"
        svg = paths["roc"].read_text()
        assert "<svg" in svg
        assert "AUC=" in svg

    def test_summary_uses_overall_accuracy(self, probabilities):
        proba, labels = probabilities
        report = build_report("acmca", proba, labels)
        expected = (proba.argmax(axis=1) == labels).mean()
        assert report.summary_row()["Accuracy"] == pytest.approx(expected)

    def test_compare_report(self, tmp_path, probabilities):
        proba, labels = probabilities
        reports = [build_report(name, proba, labels) for name in ("acmca", "acmca-wcm")]
        frame, paths = compare_report(reports, tmp_path, {"seed": 7})
        assert list(frame.columns) == ["variant", "Accuracy", "Recall", "Specificity", "F1", "AUC"]
        assert frame["variant"].tolist() == ["acmca", "acmca-wcm"]
        assert set(paths) == {"comparison", "roc"}
        metadata, _ = read_csv_with_metadata(paths["comparison"])
        assert metadata["seed"] == "7" and metadata["runs"] == "2"

    def test_compare_needs_reports(self):
        with pytest.raises(UsageError):
            compare_report([])

    def test_sweep_report(self, tmp_path):
        paths = write_sweep_report("epochs", [(25, 0.5), (50, 0.75)], tmp_path)
        metadata, frame = read_csv_with_metadata(paths["sweep"])
        assert frame.columns.tolist() == ["epochs", "test_accuracy"]
        assert metadata["axis"] == "epochs"
        assert "Test accuracy vs epochs" in paths["plot"].read_text()

    def test_svg_output_is_reproducible(self, tmp_path, probabilities):
        """같은 입력 → 같은 바이트 (날짜/요소 id 고정)"""
        proba, labels = probabilities
        report = build_report("acmca", proba, labels)
        first = write_report(report, tmp_path / "a")["roc"].read_bytes()
        second = write_report(report, tmp_path / "b")["roc"].read_bytes()
        assert first == second

    def test_undefined_curves_left_out_of_plot(self, tmp_path):
        """한 클래스가 없는 테스트 집합: 그 클래스 곡선은 범례에 없다"""
        proba = np.array([[0.8, 0.1, 0.1], [0.2, 0.7, 0.1], [0.6, 0.3, 0.1], [0.1, 0.8, 0.1]])
        report = build_report("acmca", proba, [0, 1, 0, 1])
        svg = write_report(report, tmp_path)["roc"].read_text()
        assert "CN (AUC=" in svg
        assert "AD (AUC=" not in svg
