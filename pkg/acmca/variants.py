"""
모델 구성과 아키텍처 변형(VariantSpec) 정의
"""
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import Config
from .errors import ConfigurationError, VariantError


class Modality(str, Enum):
    """네 가지 모달리티 (순서가 토큰 연결 순서)"""
    CLINICAL = "C"
    GENETIC = "G"
    MRI = "M"
    PET = "P"


MODALITY_ORDER: Tuple[Modality, ...] = (Modality.CLINICAL, Modality.GENETIC, Modality.MRI, Modality.PET)

# 비영상 → 영상 쌍 (query 제공 측, key/value 제공 측)
FUSION_PAIRS: Tuple[Tuple[Modality, Modality], ...] = (
    (Modality.CLINICAL, Modality.MRI),
    (Modality.GENETIC, Modality.PET),
)


class FusionMode(str, Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"
    MCAD = "mcad"
    NONE = "none"


class DeepExtractMode(str, Enum):
    PARALLEL = "parallel"
    FOURIER_ONLY = "fourier-only"
    ATTENTION_ONLY = "attention-only"
    NONE = "none"


class MergeMode(str, Enum):
    SUM = "sum"
    CONCAT_PROJECT = "concat-project"


class TokenLayout(BaseModel):
    """특징 벡터 d = n_tokens × token_dim 토큰 배치"""
    n_tokens: int = Field(ge=1)
    token_dim: int = Field(ge=1)

    @property
    def feature_dim(self) -> int:
        return self.n_tokens * self.token_dim


def valid_square_dims(upper: int = 400) -> List[int]:
    return [k * k for k in range(2, int(math.isqrt(upper)) + 1)]


class ModelConfig(BaseModel):
    """네트워크 폭/깊이 설정. 토큰 배치를 지정하지 않으면 √d × √d 정사각 배치"""
    model_config = ConfigDict(extra="forbid")

    feature_dim: int = Field(default=Config.FEATURE_DIM, ge=1, description="모달리티 특징 차원 d")
    n_tokens: Optional[int] = Field(default=None, ge=1)
    token_dim: Optional[int] = Field(default=None, ge=1)
    encoder_layers: int = Field(default=Config.ENCODER_LAYERS, ge=1)
    encoder_hidden: int = Field(default=Config.ENCODER_HIDDEN, ge=1)
    ffn_hidden: int = Field(default=Config.FFN_HIDDEN, ge=1)
    num_heads: int = Field(default=Config.NUM_HEADS, ge=1)
    classifier_hidden: Tuple[int, ...] = Field(default=Config.CLASSIFIER_HIDDEN)
    num_classes: int = Field(default=Config.NUM_CLASSES, ge=2)
    merge: MergeMode = MergeMode.SUM
    layer_norm_eps: float = Field(default=Config.LAYER_NORM_EPS, gt=0)

    def layout(self) -> TokenLayout:
        """토큰 배치 계산. d와 맞지 않으면 ConfigurationError"""
        d = self.feature_dim
        n, td = self.n_tokens, self.token_dim
        if n is None and td is None:
            root = math.isqrt(d)
            if root * root != d:
                raise ConfigurationError(
                    f"feature_dim {d} has no square token layout; valid values: {valid_square_dims()}"
                )
            n, td = root, root
        elif n is None:
            if d % td:
                raise ConfigurationError(f"feature_dim {d} is not divisible by token_dim {td}")
            n = d // td
        elif td is None:
            if d % n:
                raise ConfigurationError(f"feature_dim {d} is not divisible by n_tokens {n}")
            td = d // n
        elif n * td != d:
            raise ConfigurationError(f"n_tokens {n} x token_dim {td} != feature_dim {d}")
        if td % self.num_heads:
            raise ConfigurationError(f"num_heads {self.num_heads} must divide token_dim {td}")
        return TokenLayout(n_tokens=n, token_dim=td)


class VariantSpec(BaseModel):
    """활성화할 아키텍처 블록 선언"""
    model_config = ConfigDict(extra="forbid")

    name: str = "acmca"
    modalities: Tuple[Modality, ...] = MODALITY_ORDER
    fusion: FusionMode = FusionMode.ASYMMETRIC
    deep_extract: DeepExtractMode = DeepExtractMode.PARALLEL
    modality_self_attention: bool = False

    @field_validator("modalities", mode="before")
    @classmethod
    def _parse_modalities(cls, value):
        if isinstance(value, str):
            cleaned = value.replace("+", ",").replace(" ", "")
            value = cleaned.split(",") if "," in cleaned else list(cleaned)
        return tuple(Modality(v.strip().upper()) if isinstance(v, str) else Modality(v) for v in value if v)

    @model_validator(mode="after")
    def _check_consistency(self):
        if not self.modalities:
            raise VariantError("variant must use at least one modality")
        ordered = tuple(m for m in MODALITY_ORDER if m in set(self.modalities))
        self.modalities = ordered

        mask = set(ordered)
        if self.fusion == FusionMode.MCAD and mask != set(MODALITY_ORDER):
            raise VariantError(
                f"variant '{self.name}': mcad fusion needs all four modalities; "
                "use a two-modality asymmetric variant or fusion 'none'"
            )
        if self.fusion in (FusionMode.ASYMMETRIC, FusionMode.SYMMETRIC):
            covered = set()
            for numeric, imaging in FUSION_PAIRS:
                if numeric in mask and imaging in mask:
                    covered |= {numeric, imaging}
            if covered != mask:
                raise VariantError(
                    f"variant '{self.name}': cross-attention fusion needs complete pairs "
                    f"(C,M) and/or (G,P), got {''.join(m.value for m in ordered)}; "
                    "use a two-modality variant or fusion 'none'"
                )
        return self

    @property
    def mask(self) -> str:
        return "".join(m.value for m in self.modalities)

    def token_count(self, n_tokens: int) -> int:
        """융합 후 토큰 수"""
        if self.fusion == FusionMode.NONE:
            return n_tokens * len(self.modalities)
        if self.fusion == FusionMode.MCAD:
            return 4 * n_tokens
        pairs = sum(1 for a, b in FUSION_PAIRS if a in self.modalities and b in self.modalities)
        return 2 * n_tokens * pairs

    @classmethod
    def named(cls, name: str) -> "VariantSpec":
        key = name.lower()
        if key not in NAMED_VARIANTS:
            raise ConfigurationError(f"unknown variant '{name}'; known: {sorted(NAMED_VARIANTS)}")
        return cls(name=key, **NAMED_VARIANTS[key])


ALL = "CGMP"

# 성능 비교/절제/모달리티 실험에 쓰이는 이름 있는 변형
NAMED_VARIANTS: Dict[str, dict] = {
    "acmca": {"modalities": ALL},
    "acmca-wcm": {"modalities": ALL, "fusion": "none"},
    "acmca-wde": {"modalities": ALL, "deep_extract": "none"},
    "acmca-wfnet": {"modalities": ALL, "deep_extract": "attention-only"},
    "acmca-wt": {"modalities": ALL, "deep_extract": "fourier-only"},
    "acmca-cm": {"modalities": ALL, "fusion": "symmetric"},
    "acmca-mcad": {"modalities": ALL, "fusion": "mcad"},
    "maddi": {"modalities": ALL, "fusion": "symmetric", "deep_extract": "none", "modality_self_attention": True},
    "maddi-acm": {"modalities": ALL, "fusion": "asymmetric", "deep_extract": "none", "modality_self_attention": True},
    "concat-baseline": {"modalities": ALL, "fusion": "none", "deep_extract": "none"},
    "clinical": {"modalities": "C", "fusion": "none"},
    "genetic": {"modalities": "G", "fusion": "none"},
    "mri": {"modalities": "M", "fusion": "none"},
    "pet": {"modalities": "P", "fusion": "none"},
    "clinical+mri": {"modalities": "CM"},
    "genetic+pet": {"modalities": "GP"},
}
