"""
SNP 품질 필터 (GQ, 결측률, MAF, HWE), 대립유전자 인코딩, 분산 기반 사이트 축소
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import gammaincc

from config import Config
from ..errors import DataError, UsageError
from .tables import FeatureVectorTable, GenotypeTable

logger = logging.getLogger(__name__)


class SnpFilterThresholds(BaseModel):
    """사이트/호출 단위 필터 임계값"""
    model_config = ConfigDict(extra="forbid")

    hwe_p: float = Field(default=Config.HWE_P_THRESHOLD, ge=0.0, le=1.0, description="p < hwe_p 사이트 제거")
    min_gq: int = Field(default=Config.MIN_GQ, ge=0, description="GQ < min_gq 호출은 결측 처리")
    min_maf: float = Field(default=Config.MIN_MAF, ge=0.0, le=0.5, description="MAF < min_maf 사이트 제거")
    max_missing: float = Field(default=Config.MAX_MISSING_RATE, ge=0.0, le=1.0, description="결측률 > max_missing 사이트 제거")


def hwe_test(n_aa: int, n_ab: int, n_bb: int) -> Tuple[float, float]:
    """
    Hardy-Weinberg 평형 카이제곱 검정 (자유도 1, 연속성 보정 없음)

    Args:
        n_aa: ref 동형접합 개수
        n_ab: 이형접합 개수
        n_bb: alt 동형접합 개수

    Returns:
        Tuple[float, float]: (χ², p-value). 관측이 없거나 단형성 사이트는 (0, 1)
    """
    n = n_aa + n_ab + n_bb
    if n == 0:
        return 0.0, 1.0
    p = (2 * n_aa + n_ab) / (2.0 * n)
    q = 1.0 - p
    expected = np.array([n * p * p, 2 * n * p * q, n * q * q])
    if np.any(expected <= 0):
        return 0.0, 1.0
    observed = np.array([n_aa, n_ab, n_bb], dtype=np.float64)
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    return chi2, float(gammaincc(0.5, chi2 / 2.0))


def mask_low_quality(g: GenotypeTable, min_gq: int) -> GenotypeTable:
    """GQ < min_gq 호출을 결측으로 (GQ 기록이 없는 호출은 그대로)"""
    low = (g.gq >= 0) & (g.gq < min_gq) & (g.calls >= 0)
    calls = np.where(low, -1, g.calls)
    return GenotypeTable(list(g.subject_ids), list(g.sites), calls, g.gq.copy())


def snp_site_report(g: GenotypeTable, thresholds: Optional[SnpFilterThresholds] = None) -> pd.DataFrame:
    """
    사이트별 필터 통계. GQ 마스킹 후 계산한다.

    Returns:
        pd.DataFrame: site_id, ref, alt, n_called, missing_rate, maf, hwe_chi2, hwe_p, kept, reason
    """
    thresholds = thresholds or SnpFilterThresholds()
    masked = mask_low_quality(g, thresholds.min_gq)
    n_subjects = len(masked)

    records = []
    for j, site in enumerate(masked.sites):
        col = masked.calls[:, j]
        called = col[col >= 0]
        n_aa, n_ab, n_bb = (int((called == k).sum()) for k in (0, 1, 2))
        n_called = len(called)
        # 정수 개수 한 번의 나눗셈: 임계값과 정확히 같은 사이트는 통과
        missing_rate = (n_subjects - n_called) / n_subjects if n_subjects else 1.0
        alt_count = n_ab + 2 * n_bb
        maf = min(alt_count, 2 * n_called - alt_count) / (2 * n_called) if n_called else 0.0
        chi2, p = hwe_test(n_aa, n_ab, n_bb)

        reasons = []
        if missing_rate > thresholds.max_missing:
            reasons.append("missing")
        if maf < thresholds.min_maf:
            reasons.append("maf")
        if p < thresholds.hwe_p:
            reasons.append("hwe")
        records.append({
            "site_id": site.site_id,
            "ref": site.ref,
            "alt": site.alt,
            "n_called": n_called,
            "missing_rate": missing_rate,
            "maf": maf,
            "hwe_chi2": chi2,
            "hwe_p": p,
            "kept": not reasons,
            "reason": ";".join(reasons) if reasons else "pass",
        })
    columns = ["site_id", "ref", "alt", "n_called", "missing_rate", "maf", "hwe_chi2", "hwe_p", "kept", "reason"]
    return pd.DataFrame.from_records(records, columns=columns)


def filter_snps(g: GenotypeTable, thresholds: Optional[SnpFilterThresholds] = None) -> GenotypeTable:
    """
    GQ 마스킹 후 결측률/MAF/HWE 필터를 통과한 사이트만 남긴다. 멱등.
    """
    thresholds = thresholds or SnpFilterThresholds()
    if g.n_sites == 0 or len(g) == 0:
        logger.warning("⚠️ filter_snps: empty genotype table, nothing to filter")
        return g
    report = snp_site_report(g, thresholds)
    masked = mask_low_quality(g, thresholds.min_gq)
    kept = np.flatnonzero(report["kept"].to_numpy())
    counts = report["reason"].str.split(";").explode().value_counts().to_dict()
    counts.pop("pass", None)
    logger.info(f"🧬 SNP filter: kept {len(kept)}/{g.n_sites} sites, removed by reason {counts}")
    return masked.select_sites(kept)


def encode_alleles(g: GenotypeTable) -> np.ndarray:
    """
    대립유전자 수 행렬 {0,1,2}. 결측 호출은 사이트 최빈값으로 대체 (동률이면 작은 값)
    """
    calls = g.calls.copy()
    for j in range(g.n_sites):
        col = calls[:, j]
        called = col[col >= 0]
        if len(called) == 0:
            raise DataError(
                f"site {g.sites[j].site_id} has no called genotypes; run filter_snps before encoding"
            )
        missing = col < 0
        if missing.any():
            mode = int(np.argmax(np.bincount(called, minlength=3)))
            col[missing] = mode
    return calls


def encode_genotype_table(g: GenotypeTable) -> FeatureVectorTable:
    return FeatureVectorTable(
        modality="genetic",
        subject_ids=list(g.subject_ids),
        values=encode_alleles(g).astype(np.float64),
        columns=[s.site_id for s in g.sites],
    )


def select_top_k_variance(matrix: np.ndarray, k: int) -> Tuple[np.ndarray, List[int]]:
    """
    분산이 큰 k개 사이트 선택. 동률은 사이트 인덱스가 작은 쪽, 원래 순서 유지

    Returns:
        Tuple[np.ndarray, List[int]]: (축소 행렬, 유지된 열 인덱스)
    """
    matrix = np.asarray(matrix)
    n_sites = matrix.shape[1]
    if k <= 0:
        raise UsageError(f"top-k variance selection needs k >= 1, got {k}")
    if k > n_sites:
        raise UsageError(f"top-k variance selection: k={k} exceeds site count {n_sites}")
    variance = matrix.astype(np.float64).var(axis=0)
    order = np.lexsort((np.arange(n_sites), -variance))
    kept = sorted(int(i) for i in order[:k])
    return matrix[:, kept], kept
