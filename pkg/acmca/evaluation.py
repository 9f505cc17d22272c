"""
평가 - 혼동 행렬, one-vs-rest 지표(정확도/재현율/특이도/F1), ROC/AUC, 비교 보고서
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils import write_csv_with_metadata
from .data.batch import CLASS_NAMES
from .errors import UsageError

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("Accuracy", "Recall", "Specificity", "F1", "AUC")
SVG_HASH_SALT = "acmca"


# =============================================================================
# 혼동 행렬과 지표
# =============================================================================

@dataclass
class ConfusionMatrix:
    """행 = 실제 클래스, 열 = 예측 클래스"""
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    def one_vs_rest(self, c: int) -> Tuple[int, int, int, int]:
        """(TP, TN, FP, FN)"""
        tp = int(self.counts[c, c])
        fn = int(self.counts[c].sum()) - tp
        fp = int(self.counts[:, c].sum()) - tp
        tn = self.total - tp - fn - fp
        return tp, tn, fp, fn


def confusion(preds: Sequence[int], labels: Sequence[int], num_classes: int = len(CLASS_NAMES)) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise UsageError(f"confusion: {len(preds)} predictions vs {len(labels)} labels")
    for name, values in (("predictions", preds), ("labels", labels)):
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise UsageError(f"confusion: {name} must be in [0, {num_classes - 1}]")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


@dataclass
class ClassMetrics:
    accuracy: float
    recall: float
    specificity: float
    f1: float
    precision: float = 0.0


@dataclass
class MetricsReport:
    per_class: Dict[str, ClassMetrics]
    macro: ClassMetrics
    overall_accuracy: float
    flags: List[str] = field(default_factory=list)


def _ratio(num: float, den: float, flag: str, flags: List[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def metrics(cm: ConfusionMatrix, class_names: Sequence[str] = CLASS_NAMES) -> MetricsReport:
    """
    클래스별 one-vs-rest로 정확도/재현율/특이도/F1을 구하고 가중치 없는 평균(macro)을 낸다.
    분모가 0인 칸은 0으로 두고 flags에 `지표[클래스]`를 남긴다.
    """
    if cm.total == 0:
        raise UsageError("metrics: confusion matrix is empty")
    flags: List[str] = []
    per_class: Dict[str, ClassMetrics] = {}
    for c in range(cm.num_classes):
        name = class_names[c]
        tp, tn, fp, fn = cm.one_vs_rest(c)
        per_class[name] = ClassMetrics(
            accuracy=(tp + tn) / cm.total,
            recall=_ratio(tp, tp + fn, f"recall[{name}]", flags),
            specificity=_ratio(tn, tn + fp, f"specificity[{name}]", flags),
            f1=_ratio(2 * tp, 2 * tp + fp + fn, f"f1[{name}]", flags),
            precision=_ratio(tp, tp + fp, f"precision[{name}]", flags),
        )
    values = list(per_class.values())
    macro = ClassMetrics(
        accuracy=float(np.mean([m.accuracy for m in values])),
        recall=float(np.mean([m.recall for m in values])),
        specificity=float(np.mean([m.specificity for m in values])),
        f1=float(np.mean([m.f1 for m in values])),
        precision=float(np.mean([m.precision for m in values])),
    )
    overall = float(np.trace(cm.counts)) / cm.total
    return MetricsReport(per_class, macro, overall, flags)


# =============================================================================
# ROC / AUC
# =============================================================================

@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    defined: bool = True

    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(scores: Sequence[float], positive: Sequence[bool]) -> RocCurve:
    """
    임계값을 서로 다른 점수값(내림차순)으로 옮기며 (FPR, TPR)을 만든다.
    같은 점수는 함께 움직인다. AUC는 사다리꼴 적분.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.0, defined=False)

    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_pos = positive[order]
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(~sorted_pos)
    # 각 고유 점수 묶음의 마지막 위치에서만 점을 찍는다
    last_of_group = np.r_[np.flatnonzero(np.diff(sorted_scores) != 0), len(sorted_scores) - 1]
    tpr = np.r_[0.0, tp[last_of_group] / n_pos]
    fpr = np.r_[0.0, fp[last_of_group] / n_neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, auc)


@dataclass
class RocReport:
    curves: Dict[str, RocCurve]
    macro_auc: float
    undefined: List[str] = field(default_factory=list)


def roc_auc(scores: np.ndarray, labels: Sequence[int], class_names: Sequence[str] = CLASS_NAMES) -> RocReport:
    """
    클래스별 one-vs-rest ROC. 한 클래스만 있는 라벨에서는 해당 클래스 AUC가 정의되지 않으며
    macro 평균에서 빠진다.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != len(labels):
        raise UsageError(f"roc_auc: scores {scores.shape} do not match {len(labels)} labels")
    curves = {name: roc_curve(scores[:, c], labels == c) for c, name in enumerate(class_names)}
    undefined = [name for name, curve in curves.items() if not curve.defined]
    defined = [curve.auc for curve in curves.values() if curve.defined]
    return RocReport(curves, float(np.mean(defined)) if defined else 0.0, undefined)


def macro_roc(curves: Sequence[RocCurve]) -> RocCurve:
    """정의된 곡선들의 FPR 합집합 격자 위 평균 TPR (평균 ROC 곡선)"""
    usable = [c for c in curves if c.defined]
    if not usable:
        return RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.0, defined=False)
    grid = np.unique(np.concatenate([c.fpr for c in usable]))
    mean_tpr = np.mean([np.interp(grid, c.fpr, c.tpr) for c in usable], axis=0)
    fpr = np.r_[0.0, grid, 1.0]
    tpr = np.r_[0.0, mean_tpr, 1.0]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, auc)


# =============================================================================
# 보고서
# =============================================================================

@dataclass
class EvalReport:
    variant: str
    n_samples: int
    confusion: ConfusionMatrix
    metrics: MetricsReport
    roc: RocReport
    macro_curve: RocCurve

    @property
    def flags(self) -> List[str]:
        return self.metrics.flags + [f"auc[{name}]" for name in self.roc.undefined]

    def summary_row(self) -> Dict[str, float]:
        """비교 표 한 줄. Accuracy는 전체 정확도(trace/total), 나머지는 macro"""
        return {
            "Accuracy": self.metrics.overall_accuracy,
            "Recall": self.metrics.macro.recall,
            "Specificity": self.metrics.macro.specificity,
            "F1": self.metrics.macro.f1,
            "AUC": self.roc.macro_auc,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for name, m in self.metrics.per_class.items():
            curve = self.roc.curves[name]
            rows.append([name, m.accuracy, m.recall, m.specificity, m.f1, curve.auc if curve.defined else 0.0])
        macro = self.metrics.macro
        rows.append(["macro", macro.accuracy, macro.recall, macro.specificity, macro.f1, self.roc.macro_auc])
        rows.append(["overall", self.metrics.overall_accuracy, np.nan, np.nan, np.nan, np.nan])
        return pd.DataFrame(rows, columns=["scope", *METRIC_COLUMNS])


def build_report(variant: str, probabilities: np.ndarray, labels: Sequence[int]) -> EvalReport:
    """
    사후 확률과 라벨로 EvalReport 생성

    Args:
        variant: 변형 이름
        probabilities: (n, 3) 클래스 사후 확률
        labels: 길이 n 정수 라벨

    Returns:
        EvalReport
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    cm = confusion(probabilities.argmax(axis=1), labels, probabilities.shape[1])
    roc = roc_auc(probabilities, labels)
    report = EvalReport(
        variant=variant,
        n_samples=len(labels),
        confusion=cm,
        metrics=metrics(cm),
        roc=roc,
        macro_curve=macro_roc(list(roc.curves.values())),
    )
    if report.flags:
        logger.warning(f"⚠️ {variant}: undefined metric cells reported as 0: {report.flags}")
    return report


# =============================================================================
# SVG 렌더링 (matplotlib)
# =============================================================================

def render_line_plot(
    series: Dict[str, Sequence[Tuple[float, float]]],
    path: Union[str, Path],
    title: str,
    x_label: str,
    y_label: str,
    x_range: Optional[Tuple[float, float]] = None,
    y_range: Optional[Tuple[float, float]] = None,
    diagonal: bool = False,
    markers: bool = False,
) -> Path:
    """
    이름 → (x, y) 점 목록을 겹친 선 그래프 SVG로 저장

    Args:
        series: 곡선 이름 → 점 목록
        path: 저장할 .svg 경로
        title: 제목
        x_label: x축 이름
        y_label: y축 이름
        x_range: x축 범위 (없으면 matplotlib 자동)
        y_range: y축 범위 (없으면 matplotlib 자동)
        diagonal: ROC 기준 대각선 표시
        markers: 점 표시 (스윕 곡선)

    Returns:
        Path: 저장된 파일
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # 같은 입력이면 같은 바이트 (요소 id와 날짜 고정)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 6))
        try:
            for name, points in series.items():
                xs = [p[0] for p in points]
                ys = [p[1] for p in points]
                ax.plot(xs, ys, marker="o" if markers else None, linewidth=2, label=name)
            if diagonal:
                ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)
            if x_range:
                ax.set_xlim(*x_range)
            if y_range:
                ax.set_ylim(*y_range)
            ax.set_title(title)
            ax.set_xlabel(x_label)
            ax.set_ylabel(y_label)
            if series:
                ax.legend(loc="lower right" if diagonal else "best")
            ax.grid(alpha=0.3)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path


def render_roc(curves: Dict[str, RocCurve], path: Union[str, Path], title: str) -> Path:
    """정의된 곡선만 AUC를 붙여 겹쳐 그린다"""
    series = {
        f"{name} (AUC={curve.auc:.3f})": curve.points()
        for name, curve in curves.items()
        if curve.defined
    }
    return render_line_plot(series, path, title, "False Positive Rate", "True Positive Rate",
                            x_range=(0.0, 1.0), y_range=(0.0, 1.0), diagonal=True)


def write_report(report: EvalReport, directory: Union[str, Path]) -> Dict[str, Path]:
    """metrics_<variant>.csv, roc_<variant>.svg 기록"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    metadata = {
        "variant": report.variant,
        "n_samples": report.n_samples,
        "overall_accuracy": report.metrics.overall_accuracy,
        "macro_auc": report.roc.macro_auc,
        "flags": report.flags or "none",
        "confusion": report.confusion.counts.ravel().tolist(),
    }
    csv_path = write_csv_with_metadata(directory / f"metrics_{report.variant}.csv", report.to_frame(), metadata)
    curves = dict(report.roc.curves)
    curves["macro"] = report.macro_curve
    svg_path = render_roc(curves, directory / f"roc_{report.variant}.svg", f"ROC - {report.variant}")
    return {"metrics": csv_path, "roc": svg_path}


def compare_report(
    reports: Sequence[EvalReport],
    directory: Optional[Union[str, Path]] = None,
    metadata: Optional[Dict] = None,
) -> Tuple[pd.DataFrame, Dict[str, Path]]:
    """
    변형별 한 줄 비교 표 (Accuracy Recall Specificity F1 AUC) + 평균 ROC 겹침 SVG

    Returns:
        Tuple[pd.DataFrame, Dict[str, Path]]: 비교 표와 기록된 파일들 (directory가 없으면 빈 dict)
    """
    if not reports:
        raise UsageError("compare_report needs at least one report")
    frame = pd.DataFrame(
        [{"variant": r.variant, **r.summary_row()} for r in reports],
        columns=["variant", *METRIC_COLUMNS],
    )
    paths: Dict[str, Path] = {}
    if directory is not None:
        directory = Path(directory)
        paths["comparison"] = write_csv_with_metadata(
            directory / "comparison.csv", frame, {"runs": len(reports), **(metadata or {})}
        )
        paths["roc"] = render_roc(
            {r.variant: r.macro_curve for r in reports}, directory / "roc_comparison.svg", "ROC comparison (macro average)"
        )
    return frame, paths


def write_sweep_report(
    axis: str,
    points: Sequence[Tuple[int, float]],
    directory: Union[str, Path],
    metadata: Optional[Dict] = None,
    label: str = "acmca",
) -> Dict[str, Path]:
    """sweep_<axis>.csv (축 값, 테스트 정확도) + sweep_<axis>.svg 곡선"""
    directory = Path(directory)
    frame = pd.DataFrame([(int(v), float(a)) for v, a in points], columns=[axis, "test_accuracy"])
    csv_path = write_csv_with_metadata(
        directory / f"sweep_{axis}.csv", frame, {"axis": axis, "variant": label, **(metadata or {})}
    )
    svg_path = render_line_plot(
        {label: list(frame.itertuples(index=False, name=None))},
        directory / f"sweep_{axis}.svg",
        f"Test accuracy vs {axis}",
        axis,
        "Test accuracy",
        markers=True,
    )
    return {"sweep": csv_path, "plot": svg_path}
