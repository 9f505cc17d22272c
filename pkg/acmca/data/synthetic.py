"""
합성 코호트 생성기 - 네 모달리티에 클래스별 가우시안 군집을 심는다

실데이터가 없는 환경의 기본 데이터 소스. 같은 시드면 같은 테이블이 나온다.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .batch import CLASS_NAMES
from .tables import CLINICAL_FEATURES, ClinicalTable, FeatureVectorTable, GenotypeTable, SiteInfo

logger = logging.getLogger(__name__)

# 임상 변수의 대략적인 중심값과 척도 (gender 제외)
CLINICAL_SCALES = {
    "age": (73.0, 7.0),
    "moca": (23.0, 4.0),
    "mmse": (27.0, 2.5),
    "cdr": (0.5, 0.4),
    "faq": (4.0, 5.0),
    "gds": (2.0, 1.5),
}
BASES = "ACGT"
# 유전형 로짓 이동량을 다른 모달리티의 표준화 거리와 비슷하게 맞추는 계수
GENOTYPE_GAIN = 1.5


class SynthSpec(BaseModel):
    """합성 코호트 생성 파라미터"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=7, description="난수 시드")
    n_per_class: int = Field(default=60, ge=2, description="클래스당 피험자 수")
    snp_count: int = Field(default=200, ge=3, description="SNP 사이트 수")
    img_width: int = Field(default=64, ge=3, description="MRI/PET 특징 벡터 폭")
    class_separation: float = Field(default=3.0, ge=0.0, description="클래스 중심 사이 거리 척도")
    modality_correlation: float = Field(default=0.3, ge=0.0, le=1.0, description="모달리티 공유 잠재 요인 강도")
    signal_layout: Literal["all", "split"] = Field(default="all", description="split: CN 신호는 C/M, AD 신호는 G/P에만")
    low_gq_rate: float = Field(default=0.01, ge=0.0, le=1.0)
    missing_rate: float = Field(default=0.005, ge=0.0, le=1.0)
    rare_site_fraction: float = Field(default=0.05, ge=0.0, le=1.0, description="MAF 필터에 걸리도록 만든 사이트 비율")
    latent_dim: int = Field(default=4, ge=1)


@dataclass
class SyntheticCohort:
    clinical: ClinicalTable
    genotypes: GenotypeTable
    mri: FeatureVectorTable
    pet: FeatureVectorTable

    def tables(self) -> Dict[str, object]:
        return {"clinical": self.clinical, "genotypes": self.genotypes, "mri": self.mri, "pet": self.pet}


def _class_directions(rng: np.random.Generator, width: int) -> np.ndarray:
    """(3, width) 정규 직교 클래스 방향"""
    q, _ = np.linalg.qr(rng.normal(size=(width, len(CLASS_NAMES))))
    return q.T


def _class_means(rng: np.random.Generator, width: int, separation: float, layout: str, carries: str) -> np.ndarray:
    """
    클래스별 평균 벡터 (3, width).
    layout 'split'일 때 carries='cn'이면 CN만, 'ad'면 AD만 나머지와 구분된다.
    """
    directions = _class_directions(rng, width)
    if layout == "all":
        return separation * directions
    means = np.zeros((len(CLASS_NAMES), width))
    target = 0 if carries == "cn" else len(CLASS_NAMES) - 1
    means[target] = separation * np.sqrt(2.0) * directions[0]
    return means


def _latent_noise(rng, shared: np.ndarray, width: int, rho: float) -> np.ndarray:
    """단위 분산 잡음. rho만큼 피험자 공유 잠재 요인을 섞는다"""
    n, r = shared.shape
    loading = rng.normal(size=(r, width)) / np.sqrt(r)
    own = rng.normal(size=(n, width))
    return np.sqrt(1.0 - rho ** 2) * own + rho * (shared @ loading)


def synth_cohort(spec: SynthSpec = None, **overrides) -> SyntheticCohort:
    """
    네 모달리티 합성 테이블 생성

    Args:
        spec: 생성 파라미터 (없으면 기본값)
        **overrides: SynthSpec 필드 개별 지정

    Returns:
        SyntheticCohort: 선언된 파일 형식으로 바로 기록할 수 있는 네 테이블
    """
    spec = spec or SynthSpec()
    if overrides:
        spec = SynthSpec(**{**spec.model_dump(), **overrides})
    rng = np.random.default_rng(spec.seed)
    n_classes = len(CLASS_NAMES)
    n = spec.n_per_class * n_classes

    labels = rng.permutation(np.repeat(np.arange(n_classes), spec.n_per_class))
    subject_ids = [f"S{i + 1:04d}" for i in range(n)]
    shared = rng.normal(size=(n, spec.latent_dim))
    rho = spec.modality_correlation
    sep = spec.class_separation
    layout = spec.signal_layout

    # --- 임상: gender + 6개 수치 변수 ---
    numeric_names = CLINICAL_FEATURES[1:]
    means = _class_means(rng, len(numeric_names), sep, layout, "cn")
    z = means[labels] + _latent_noise(rng, shared, len(numeric_names), rho)
    centers = np.array([CLINICAL_SCALES[c][0] for c in numeric_names])
    scales = np.array([CLINICAL_SCALES[c][1] for c in numeric_names])
    gender = rng.integers(0, 2, size=n).astype(np.float64)
    clinical = ClinicalTable(subject_ids, np.column_stack([gender, centers + scales * z]), labels)

    # --- MRI / PET 특징 벡터 ---
    mri_means = _class_means(rng, spec.img_width, sep, layout, "cn")
    mri = mri_means[labels] + _latent_noise(rng, shared, spec.img_width, rho)
    pet_means = _class_means(rng, spec.img_width, sep, layout, "ad")
    pet = pet_means[labels] + _latent_noise(rng, shared, spec.img_width, rho)

    # --- 유전형: 사이트별 alt 빈도 + 클래스별 로짓 이동 ---
    s = spec.snp_count
    base_freq = rng.uniform(0.1, 0.5, size=s)
    rare = rng.random(s) < spec.rare_site_fraction
    base_freq[rare] = 0.002
    shift = GENOTYPE_GAIN * _class_means(rng, s, sep, layout, "ad")
    shift[:, rare] = 0.0
    logit = np.log(base_freq / (1.0 - base_freq))[None, :] + shift[labels]
    logit = logit + 0.5 * rho * _latent_noise(rng, shared, s, 1.0)
    prob = 1.0 / (1.0 + np.exp(-logit))
    calls = (rng.random((n, s)) < prob).astype(np.int64) + (rng.random((n, s)) < prob).astype(np.int64)

    gq = rng.integers(25, 100, size=(n, s))
    low = rng.random((n, s)) < spec.low_gq_rate
    gq[low] = rng.integers(1, 20, size=int(low.sum()))
    missing = rng.random((n, s)) < spec.missing_rate
    calls[missing] = -1
    gq[missing] = -1

    sites = []
    for j in range(s):
        ref, alt = rng.choice(len(BASES), size=2, replace=False)
        sites.append(SiteInfo(f"rs{100000 + j}", BASES[ref], BASES[alt]))

    logger.info(
        f"🧪 synthetic cohort: {n} subjects, {s} SNPs, imaging width {spec.img_width}, "
        f"separation {sep}, layout {layout}"
    )
    return SyntheticCohort(
        clinical=clinical,
        genotypes=GenotypeTable(subject_ids, sites, calls, gq),
        mri=FeatureVectorTable("mri", subject_ids, mri),
        pet=FeatureVectorTable("pet", subject_ids, pet),
    )
