"""
실험 설정과 프리셋 정의

- TOML 설정 문서 → ExperimentConfig (알 수 없는 키는 거부)
- 프리셋 이름 → 실행 목록(RunSpec)
"""
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import Config
from acmca.data.genotype import SnpFilterThresholds
from acmca.data.synthetic import SynthSpec
from acmca.errors import ConfigurationError, UsageError
from acmca.training import SWEEP_AXES, TrainConfig
from acmca.variants import ModelConfig, VariantSpec

logger = logging.getLogger(__name__)

# 원본 파일 경로 필드 → CLI 플래그
SOURCE_FLAGS = {
    "clinical": "--clinical",
    "genotype": "--genotype",
    "mri_features": "--mri-features",
    "pet_features": "--pet-features",
}


class PresetName(str, Enum):
    """실험 프리셋"""
    MODALITY_MATRIX = "modality-matrix"
    VARIANT_COMPARISON = "variant-comparison"
    ABLATION_SUITE = "ablation-suite"
    SWEEP_EPOCHS = "sweep-epochs"
    SWEEP_BATCH = "sweep-batch"
    SWEEP_DIM = "sweep-dim"


SWEEP_PRESETS: Dict[PresetName, str] = {
    PresetName.SWEEP_EPOCHS: "epochs",
    PresetName.SWEEP_BATCH: "batch_size",
    PresetName.SWEEP_DIM: "feature_dim",
}

# 축별 기본 스윕 값 (최적 파라미터 탐색 범위)
SWEEP_DEFAULTS: Dict[str, List[int]] = {
    "epochs": [25, 50, 75, 100, 125, 150],
    "batch_size": [8, 16, 32, 64],
    "feature_dim": [36, 64, 100, 144],
}

PRESET_VARIANTS: Dict[PresetName, List[str]] = {
    # 단일 모달리티 4개, 임상+MRI, 유전+PET, 네 모달리티 전체
    PresetName.MODALITY_MATRIX: ["clinical", "genetic", "mri", "pet", "clinical+mri", "genetic+pet", "acmca"],
    PresetName.VARIANT_COMPARISON: ["acmca", "acmca-cm", "acmca-mcad", "concat-baseline", "maddi", "maddi-acm"],
    PresetName.ABLATION_SUITE: ["acmca-wcm", "acmca-wde", "acmca-wfnet", "acmca-wt", "acmca"],
}


# =============================================================================
# 설정 문서
# =============================================================================

class DataSection(BaseModel):
    """[data] 섹션 - 합성 생성기 또는 원본 파일 네 개, 혹은 이미 준비된 데이터셋"""
    model_config = ConfigDict(extra="forbid")

    synthetic: SynthSpec = Field(default_factory=SynthSpec)
    clinical: Optional[str] = None
    genotype: Optional[str] = None
    mri_features: Optional[str] = None
    pet_features: Optional[str] = None
    prepared: Optional[str] = Field(default=None, description="이미 준비된 데이터셋 디렉토리")
    thresholds: SnpFilterThresholds = Field(default_factory=SnpFilterThresholds)
    top_k: int = Field(default=Config.TOP_K_SNPS, ge=0, description="분산 상위 k개 SNP만 사용 (0이면 전체)")
    test_fraction: float = Field(default=Config.TEST_FRACTION, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_sources(self):
        given = [name for name in SOURCE_FLAGS if getattr(self, name)]
        if given and len(given) != len(SOURCE_FLAGS):
            missing = [flag for name, flag in SOURCE_FLAGS.items() if name not in given]
            raise UsageError(f"file-based preparation needs all four sources; missing {', '.join(missing)}")
        return self

    @property
    def source(self) -> Literal["prepared", "files", "synthetic"]:
        if self.prepared:
            return "prepared"
        if self.clinical:
            return "files"
        return "synthetic"


class TrainSection(BaseModel):
    """[train] 섹션"""
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=Config.LEARNING_RATE, gt=0)
    batch_size: int = Field(default=Config.BATCH_SIZE, ge=1)
    epochs: int = Field(default=Config.EPOCHS, ge=1)
    feature_dim: int = Field(default=Config.FEATURE_DIM, ge=1)
    optimizer: Literal["sgd", "adam"] = Config.OPTIMIZER


class OutputSection(BaseModel):
    """[output] 섹션"""
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = Field(default=None, description="없으면 ACMCA_OUTPUT_ROOT 아래")


class ExperimentConfig(BaseModel):
    """실험 한 번의 전체 설정. 모든 필드에 기본값이 있다"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=Config.SEED, description="분할/초기화 공용 시드")
    data: DataSection = Field(default_factory=DataSection)
    train: TrainSection = Field(default_factory=TrainSection)
    model: ModelConfig = Field(default_factory=ModelConfig)
    variants: List[VariantSpec] = Field(default_factory=lambda: [VariantSpec.named("acmca")])
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("variants", mode="before")
    @classmethod
    def _expand_named(cls, value):
        """이름만 적힌 변형은 미리 정의된 변형으로 펼친다"""
        expanded = []
        for item in value or []:
            if isinstance(item, str):
                item = VariantSpec.named(item)
            elif isinstance(item, dict) and set(item) == {"name"}:
                item = VariantSpec.named(item["name"])
            expanded.append(item)
        if not expanded:
            raise UsageError("at least one variant is required")
        return expanded

    def train_config(self, variant: Optional[VariantSpec] = None, **overrides: Any) -> TrainConfig:
        """변형 하나에 대한 TrainConfig (overrides는 스윕 축 값)"""
        fields = {**self.train.model_dump(), **overrides}
        return TrainConfig(
            **fields,
            seed=self.seed,
            variant=variant or self.variants[0],
            model=self.model,
        )

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> "ExperimentConfig":
        """섹션별 덮어쓰기 (CLI 플래그). None 값은 무시한다"""
        merged = self.model_dump(mode="json")
        for section, values in overrides.items():
            if isinstance(values, dict):
                target = merged.setdefault(section, {})
                for key, value in values.items():
                    if value is None:
                        continue
                    if isinstance(value, dict):
                        target.setdefault(key, {}).update({k: v for k, v in value.items() if v is not None})
                    else:
                        target[key] = value
            elif values is not None:
                merged[section] = values
        return validate_config(merged)


def validate_config(raw: Dict[str, Any], source: str = "config") -> ExperimentConfig:
    """pydantic 검증 오류를 ConfigurationError로 바꿔 종료 코드 2로 이어지게 한다"""
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"invalid {source}: {problems}") from None


def load_experiment_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    TOML 설정 파일 읽기

    Args:
        path: 설정 파일 경로 (없으면 기본 설정)

    Returns:
        ExperimentConfig: 검증된 설정
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid TOML: {e}") from None
    logger.info(f"📄 config loaded: {path}")
    return validate_config(raw, source=str(path))


# =============================================================================
# 프리셋 실행 목록
# =============================================================================

class RunSpec(BaseModel):
    """프리셋을 구성하는 학습/평가 한 건"""
    run_id: str
    variant: VariantSpec
    overrides: Dict[str, int] = Field(default_factory=dict)
    checkpoint: Literal["best", "final"] = "best"

    def train_config(self, config: ExperimentConfig) -> TrainConfig:
        return config.train_config(self.variant, **self.overrides)


def parse_preset(name: str) -> PresetName:
    try:
        return PresetName(name)
    except ValueError:
        raise UsageError(f"unknown preset '{name}'; choose from {[p.value for p in PresetName]}") from None


def sweep_runs(axis: str, values: Sequence[int], variant: VariantSpec) -> List[RunSpec]:
    """스윕은 마지막 에폭 파라미터로 평가한다"""
    if axis not in SWEEP_AXES:
        raise UsageError(f"unknown sweep axis '{axis}'; choose from {list(SWEEP_AXES)}")
    if not values:
        raise UsageError("sweep needs at least one value")
    return [
        RunSpec(run_id=f"{axis}_{int(v)}", variant=variant, overrides={axis: int(v)}, checkpoint="final")
        for v in values
    ]


def preset_runs(
    preset: Union[str, PresetName],
    config: ExperimentConfig,
    values: Optional[Sequence[int]] = None,
) -> List[RunSpec]:
    """
    프리셋 → 실행 목록. 실행 전에 모든 학습 설정을 검증한다 (예: 토큰 배치가 없는 d)

    Args:
        preset: 프리셋 이름
        config: 공용 설정 (시드, 데이터, 학습 하이퍼파라미터)
        values: 스윕 프리셋의 축 값 (없으면 기본 범위)

    Returns:
        List[RunSpec]: 실행 순서대로의 목록
    """
    preset = parse_preset(preset) if isinstance(preset, str) else preset
    if preset in SWEEP_PRESETS:
        axis = SWEEP_PRESETS[preset]
        runs = sweep_runs(axis, list(values) if values else SWEEP_DEFAULTS[axis], config.variants[0])
    else:
        if values:
            raise UsageError(f"--values only applies to sweep presets, not '{preset.value}'")
        runs = [RunSpec(run_id=name, variant=VariantSpec.named(name)) for name in PRESET_VARIANTS[preset]]

    for run in runs:
        run.train_config(config).resolved_model()
    return runs
