"""
ACMCA 패키지 - 비대칭 교차 모달 교차 어텐션 분류기와 실험 도구
"""
from .errors import (
    AcmcaError,
    ConfigurationError,
    DataError,
    EmptyIntersectionError,
    InternalError,
    NumericError,
    SchemaError,
    ShapeError,
    StratificationError,
    UsageError,
    VariantError,
)
from .tensor import Tensor, backward, no_grad
from .variants import (
    NAMED_VARIANTS,
    DeepExtractMode,
    FusionMode,
    MergeMode,
    Modality,
    ModelConfig,
    TokenLayout,
    VariantSpec,
)
from .model import AcmcaNetwork
from .checkpoint import load_checkpoint, save_checkpoint
from .training import TrainConfig, TrainLog, cross_entropy, sweep, train
from .evaluation import EvalReport, build_report, compare_report, write_report

__all__ = [
    'AcmcaError',
    'ConfigurationError',
    'DataError',
    'EmptyIntersectionError',
    'InternalError',
    'NumericError',
    'SchemaError',
    'ShapeError',
    'StratificationError',
    'UsageError',
    'VariantError',
    'Tensor',
    'backward',
    'no_grad',
    'NAMED_VARIANTS',
    'DeepExtractMode',
    'FusionMode',
    'MergeMode',
    'Modality',
    'ModelConfig',
    'TokenLayout',
    'VariantSpec',
    'AcmcaNetwork',
    'load_checkpoint',
    'save_checkpoint',
    'TrainConfig',
    'TrainLog',
    'cross_entropy',
    'sweep',
    'train',
    'EvalReport',
    'build_report',
    'compare_report',
    'write_report',
]
