"""
공용 픽스처 - 작은 모델 설정과 합성 데이터셋
"""
import numpy as np
import pytest

from acmca.data import ModalBatch, build_dataset, synth_cohort
from acmca.variants import ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    """d=4 (2 토큰 × 2 차원), 빠른 gradient 검사용"""
    return ModelConfig(
        feature_dim=4,
        encoder_layers=1,
        encoder_hidden=4,
        ffn_hidden=3,
        classifier_hidden=(5,),
    )


@pytest.fixture
def small_config():
    """d=16, 짧은 학습 스모크 테스트용"""
    return ModelConfig(
        feature_dim=16,
        encoder_layers=2,
        encoder_hidden=16,
        ffn_hidden=8,
        classifier_hidden=(16, 8),
    )


@pytest.fixture
def tiny_batch(rng):
    """6명, 네 모달리티 폭 (7, 5, 6, 6)"""
    n = 6
    return ModalBatch(
        subject_ids=[f"T{i}" for i in range(n)],
        clinical=rng.normal(size=(n, 7)),
        genetic=rng.integers(0, 3, size=(n, 5)).astype(float),
        mri=rng.normal(size=(n, 6)),
        pet=rng.normal(size=(n, 6)),
        labels=np.array([0, 1, 2, 0, 1, 2]),
    )


@pytest.fixture(scope="session")
def synthetic_dataset():
    """클래스당 20명, 40 SNP, 영상 폭 12"""
    cohort = synth_cohort(seed=3, n_per_class=20, snp_count=40, img_width=12)
    dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=3)
    return dataset
