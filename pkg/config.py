# ACMCA Desk Configuration
import os
from dotenv import load_dotenv

# .env 파일 로드
load_dotenv()

class Config:
    # 학습 기본값 (논문 최적 파라미터 표 기준)
    LEARNING_RATE = 1e-3
    BATCH_SIZE = 32
    EPOCHS = 125
    FEATURE_DIM = 100  # 영상/비영상 특징 차원
    OPTIMIZER = "adam"
    SEED = int(os.getenv("ACMCA_SEED", "7"))

    # 모델 구조 기본값
    ENCODER_LAYERS = 2
    ENCODER_HIDDEN = 256
    CLASSIFIER_HIDDEN = (256, 128, 64)
    NUM_CLASSES = 3  # CN / MCI / AD
    FFN_HIDDEN = 32
    NUM_HEADS = 1
    LAYER_NORM_EPS = 1e-5

    # SNP 필터 임계값
    HWE_P_THRESHOLD = 0.05
    MIN_GQ = 20
    MIN_MAF = 0.01
    MAX_MISSING_RATE = 0.05
    TOP_K_SNPS = int(os.getenv("ACMCA_TOP_K_SNPS", "0"))  # 0이면 축소하지 않음

    # 데이터 분할
    TEST_FRACTION = 0.2

    # 출력 설정
    OUTPUT_ROOT = os.getenv("ACMCA_OUTPUT_ROOT", "runs")
    LOG_LEVEL = os.getenv("ACMCA_LOG_LEVEL", "INFO")

    # 프리셋 동시 실행 수
    MAX_CONCURRENT_RUNS = int(os.getenv("ACMCA_MAX_CONCURRENT_RUNS", "2"))

    # 체크포인트 포맷 버전
    CHECKPOINT_FORMAT_VERSION = 1

    @classmethod
    def snp_thresholds(cls) -> dict:
        """SNP 필터 기본 임계값"""
        return {
            "hwe_p": cls.HWE_P_THRESHOLD,
            "min_gq": cls.MIN_GQ,
            "min_maf": cls.MIN_MAF,
            "max_missing": cls.MAX_MISSING_RATE,
        }
