"""
코호트 구성 - 모달리티 교집합, 층화 분할, 정규화, 준비된 데이터셋 저장/불러오기
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import DataError, EmptyIntersectionError, StratificationError, UsageError
from .batch import CLASS_NAMES, ModalBatch
from .genotype import SnpFilterThresholds, encode_genotype_table, filter_snps, select_top_k_variance, snp_site_report
from .tables import CLINICAL_FEATURES, ClinicalTable, FeatureVectorTable, GenotypeTable

logger = logging.getLogger(__name__)


# =============================================================================
# 교집합과 분할
# =============================================================================

def intersect_cohort(
    clinical: ClinicalTable,
    genetic: FeatureVectorTable,
    mri: FeatureVectorTable,
    pet: FeatureVectorTable,
) -> ModalBatch:
    """
    네 모달리티를 모두 가진 피험자만 남긴다 (id 정렬 순서). 라벨은 임상 테이블에서 가져온다.
    """
    common = set(clinical.subject_ids) & set(genetic.subject_ids) & set(mri.subject_ids) & set(pet.subject_ids)
    if not common:
        raise EmptyIntersectionError(
            f"no subject appears in all four sources (clinical {len(clinical)}, genetic {len(genetic)}, "
            f"mri {len(mri)}, pet {len(pet)}); check subject ids or run 'prepare --synthetic'"
        )
    ids = sorted(common)
    values, labels = clinical.rows(ids)
    logger.info(f"🔗 cohort intersection: {len(ids)} subjects")
    return ModalBatch(
        subject_ids=ids,
        clinical=values,
        genetic=genetic.rows(ids),
        mri=mri.rows(ids),
        pet=pet.rows(ids),
        labels=labels,
    )


def stratified_test_size(n_class: int, test_fraction: float) -> int:
    """반올림(floor(n·f + 0.5)) 후 [1, n-1]로 제한"""
    return int(min(max(np.floor(n_class * test_fraction + 0.5), 1), n_class - 1))


def split_stratified(cohort: ModalBatch, test_fraction: float, seed: int) -> Tuple[ModalBatch, ModalBatch]:
    """
    클래스별 비율을 유지하는 train/test 분할

    Args:
        cohort: 전체 코호트
        test_fraction: 0 < f < 1
        seed: 분할 시드

    Returns:
        Tuple[ModalBatch, ModalBatch]: (train, test), 각각 원래 피험자 순서 유지
    """
    if not 0.0 < test_fraction < 1.0:
        raise UsageError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx: List[int] = []
    for c in range(len(CLASS_NAMES)):
        members = np.flatnonzero(cohort.labels == c)
        if len(members) == 0:
            continue
        if len(members) < 2:
            raise StratificationError(
                f"class {CLASS_NAMES[c]} has {len(members)} sample; stratified split needs at least 2 per class"
            )
        n_test = stratified_test_size(len(members), test_fraction)
        test_idx.extend(rng.permutation(members)[:n_test].tolist())

    test_mask = np.zeros(len(cohort), dtype=bool)
    test_mask[test_idx] = True
    return cohort.subset(np.flatnonzero(~test_mask)), cohort.subset(np.flatnonzero(test_mask))


# =============================================================================
# 정규화
# =============================================================================

@dataclass
class ColumnStats:
    """train 분할에서 학습한 열별 평균/표준편차"""
    columns: List[str]
    mean: np.ndarray
    std: np.ndarray
    passthrough: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "columns": list(self.columns),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "passthrough": list(self.passthrough),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ColumnStats":
        return cls(data["columns"], np.asarray(data["mean"]), np.asarray(data["std"]), data.get("passthrough", []))


def fit_column_stats(values: np.ndarray, columns: List[str], passthrough: Optional[List[str]] = None) -> ColumnStats:
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    for name in passthrough or []:
        i = columns.index(name)
        mean[i], std[i] = 0.0, 1.0
    zero = [columns[i] for i in np.flatnonzero(std == 0)]
    if zero:
        logger.warning(f"⚠️ zero-variance column(s) {zero[:10]}: centered only")
    return ColumnStats(columns, mean, std, list(passthrough or []))


def apply_column_stats(values: np.ndarray, stats: ColumnStats) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[1] != len(stats.columns):
        raise DataError(f"normalization stats cover {len(stats.columns)} columns, data has {values.shape[1]}")
    scale = np.where(stats.std > 0, stats.std, 1.0)
    return (values - stats.mean) / scale


def normalize_clinical(
    table: Union[ClinicalTable, np.ndarray],
    stats: Optional[ColumnStats] = None,
) -> Tuple[np.ndarray, ColumnStats]:
    """
    수치 열 z-score, gender는 {0,1} 그대로. stats가 없으면 입력으로 학습한다.
    """
    values = table.values if isinstance(table, ClinicalTable) else np.asarray(table, dtype=np.float64)
    if stats is None:
        stats = fit_column_stats(values, list(CLINICAL_FEATURES), passthrough=["gender"])
    return apply_column_stats(values, stats), stats


def standardize(values: np.ndarray, stats: Optional[ColumnStats] = None, prefix: str = "f") -> Tuple[np.ndarray, ColumnStats]:
    """영상 특징 열별 z-score (0 분산 열은 중심화만)"""
    values = np.asarray(values, dtype=np.float64)
    if stats is None:
        stats = fit_column_stats(values, [f"{prefix}{i}" for i in range(values.shape[1])])
    return apply_column_stats(values, stats), stats


# =============================================================================
# 준비된 데이터셋
# =============================================================================

def _batch_arrays(batch: ModalBatch) -> Dict[str, np.ndarray]:
    return {
        "subject_ids": np.asarray(batch.subject_ids, dtype=str),
        "clinical": batch.clinical,
        "genetic": batch.genetic,
        "mri": batch.mri,
        "pet": batch.pet,
        "labels": batch.labels,
    }


def _load_batch(path: Path) -> ModalBatch:
    if not path.exists():
        raise DataError(f"prepared dataset file missing: {path}; run 'prepare' first")
    with np.load(path, allow_pickle=False) as data:
        return ModalBatch(
            subject_ids=[str(s) for s in data["subject_ids"]],
            clinical=data["clinical"],
            genetic=data["genetic"],
            mri=data["mri"],
            pet=data["pet"],
            labels=data["labels"],
        )


@dataclass
class PreparedDataset:
    """정규화까지 끝난 train/test 분할과 manifest"""
    train: ModalBatch
    test: ModalBatch
    manifest: Dict[str, Any] = field(default_factory=dict)

    @property
    def widths(self) -> Dict[str, int]:
        return self.train.widths()

    def save(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savez(directory / "train.npz", **_batch_arrays(self.train))
        np.savez(directory / "test.npz", **_batch_arrays(self.test))
        manifest = dict(self.manifest)
        manifest["widths"] = self.widths
        manifest["counts"] = {
            "subjects": len(self.train) + len(self.test),
            "train": len(self.train),
            "test": len(self.test),
            "train_per_class": dict(zip(CLASS_NAMES, self.train.class_counts())),
            "test_per_class": dict(zip(CLASS_NAMES, self.test.class_counts())),
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
        logger.info(f"💾 prepared dataset saved: {directory}")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "PreparedDataset":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"no manifest.json in {directory}; run 'prepare' first")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        dataset = cls(_load_batch(directory / "train.npz"), _load_batch(directory / "test.npz"), manifest)
        if manifest.get("widths") and manifest["widths"] != dataset.widths:
            raise DataError(f"manifest widths {manifest['widths']} do not match arrays {dataset.widths}")
        return dataset


def build_dataset(
    clinical: ClinicalTable,
    genotypes: GenotypeTable,
    mri: FeatureVectorTable,
    pet: FeatureVectorTable,
    thresholds: Optional[SnpFilterThresholds] = None,
    top_k: int = 0,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> Tuple[PreparedDataset, pd.DataFrame]:
    """
    원본 테이블 → SNP 필터 → 인코딩 → (top-k) → 교집합 → 층화 분할 → train 기준 정규화

    Returns:
        Tuple[PreparedDataset, pd.DataFrame]: 데이터셋과 사이트별 필터 보고서
    """
    thresholds = thresholds or SnpFilterThresholds()
    report = snp_site_report(genotypes, thresholds)
    filtered = filter_snps(genotypes, thresholds)
    if filtered.n_sites == 0:
        raise DataError("no SNP site passed the quality filters; relax thresholds or check the genotype file")
    genetic = encode_genotype_table(filtered)
    if top_k and top_k < genetic.width:
        reduced, kept = select_top_k_variance(genetic.values, top_k)
        genetic = FeatureVectorTable("genetic", genetic.subject_ids, reduced, [genetic.columns[i] for i in kept])
        logger.info(f"📉 top-{top_k} variance selection kept {len(kept)} sites")

    cohort = intersect_cohort(clinical, genetic, mri, pet)
    train, test = split_stratified(cohort, test_fraction, seed)

    train.clinical, clinical_stats = normalize_clinical(train.clinical)
    test.clinical, _ = normalize_clinical(test.clinical, clinical_stats)
    train.mri, mri_stats = standardize(train.mri)
    test.mri, _ = standardize(test.mri, mri_stats)
    train.pet, pet_stats = standardize(train.pet)
    test.pet, _ = standardize(test.pet, pet_stats)

    manifest = {
        "seed": seed,
        "test_fraction": test_fraction,
        "thresholds": thresholds.model_dump(),
        "top_k": top_k,
        "snp_sites": {"input": genotypes.n_sites, "after_filter": filtered.n_sites, "used": genetic.width},
        "genetic_sites": list(genetic.columns),
        "clinical_stats": clinical_stats.to_dict(),
    }
    return PreparedDataset(train, test, manifest), report
