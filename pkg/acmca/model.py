"""
ACMCA 네트워크 - 얕은 인코더, 교차 모달 융합, 병렬 Fourier/self-attention 심층 추출, MLP 분류기
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from .data.batch import ModalBatch
from .errors import ConfigurationError
from .fusion import FusionParams, fuse
from .layers import (
    Dense, FourierBlock, LayerNormParams, ParamGroup, SelfAttentionBlock, glorot_uniform, sinusoidal_encoding,
    zeros_param,
)
from .tensor import Tensor, concat, no_grad, relu, reshape, softmax
from .variants import (
    DeepExtractMode, FusionMode, MergeMode, Modality, ModelConfig, TokenLayout, VariantSpec,
)

logger = logging.getLogger(__name__)


# =============================================================================
# 얕은 특징 추출
# =============================================================================

class EncoderParams(ParamGroup):
    """모달리티별 Dense 층 묶음: 입력 폭 → (hidden …) → d"""

    def __init__(self, rng: np.random.Generator, input_widths: Dict[Modality, int], config: ModelConfig):
        super().__init__()
        self.feature_dim = config.feature_dim
        self.layers: Dict[Modality, List[Dense]] = {}
        for modality, width in input_widths.items():
            dims = [width] + [config.encoder_hidden] * (config.encoder_layers - 1) + [config.feature_dim]
            group = self.child(modality.value, ParamGroup())
            layers = []
            for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
                layers.append(group.child(f"layer{i}", Dense(rng, fan_in, fan_out)))
            self.layers[modality] = layers

    def input_width(self, modality: Modality) -> int:
        return self.layers[modality][0].fan_in


def encode_modalities(batch: ModalBatch, params: EncoderParams) -> Dict[Modality, Tensor]:
    """
    활성 모달리티마다 (b, d) 특징. 마스크 밖의 모달리티는 건너뛴다.

    Args:
        batch: 입력 배치
        params: 인코더 파라미터 (생성 시 전달된 모달리티만 활성)

    Returns:
        Dict[Modality, Tensor]: 모달리티 → (b, d)
    """
    features: Dict[Modality, Tensor] = {}
    for modality, layers in params.layers.items():
        raw = batch.features(modality)
        expected = layers[0].fan_in
        if raw.ndim != 2 or raw.shape[1] != expected:
            raise ConfigurationError(
                f"modality {modality.value} ({modality.name.lower()}): encoder expects width {expected}, "
                f"batch has shape {raw.shape}"
            )
        x = Tensor(raw)
        for i, layer in enumerate(layers):
            x = layer(x)
            if i < len(layers) - 1:
                x = relu(x)
        features[modality] = x
    return features


# =============================================================================
# 토큰화
# =============================================================================

def tokenize(feat: Tensor, layout: TokenLayout, positional: Optional[np.ndarray] = None) -> Tensor:
    """(b, d) → (b, n_tokens, token_dim) + 사인파 위치 인코딩"""
    b, d = feat.shape
    if d != layout.feature_dim:
        raise ConfigurationError(
            f"cannot tokenize width {d} into {layout.n_tokens} tokens x {layout.token_dim} dims"
        )
    table = sinusoidal_encoding(layout.n_tokens, layout.token_dim) if positional is None else positional
    return reshape(feat, (b, layout.n_tokens, layout.token_dim)) + Tensor(table)


def detokenize(tokens: Tensor, layout: TokenLayout, positional: Optional[np.ndarray] = None) -> Tensor:
    table = sinusoidal_encoding(layout.n_tokens, layout.token_dim) if positional is None else positional
    b = tokens.shape[0]
    return reshape(tokens - Tensor(table), (b, layout.feature_dim))


# =============================================================================
# 심층 특징 추출
# =============================================================================

class DeepExtractParams(ParamGroup):
    """self-attention 블록, Fourier 블록, 병합 파라미터"""

    def __init__(self, rng: np.random.Generator, config: ModelConfig, layout: TokenLayout, mode: DeepExtractMode):
        super().__init__()
        td = layout.token_dim
        eps = config.layer_norm_eps
        self.merge = config.merge
        self.attention = None
        self.fourier = None
        if mode in (DeepExtractMode.PARALLEL, DeepExtractMode.ATTENTION_ONLY):
            self.attention = self.child(
                "attention", SelfAttentionBlock(rng, td, config.ffn_hidden, config.num_heads, eps)
            )
        if mode in (DeepExtractMode.PARALLEL, DeepExtractMode.FOURIER_ONLY):
            self.fourier = self.child("fourier", FourierBlock(rng, td, config.ffn_hidden, eps))
        if mode == DeepExtractMode.PARALLEL:
            if config.merge == MergeMode.CONCAT_PROJECT:
                self.merge_weight = self.param("merge_weight", glorot_uniform(rng, 2 * td, td))
                self.merge_bias = self.param("merge_bias", zeros_param(td))
            self.merge_norm = self.child("merge_norm", LayerNormParams(td, eps))


def deep_extract(
    fused: Tensor,
    params: Optional[DeepExtractParams],
    mode: DeepExtractMode,
    attention_log: Optional[list] = None,
) -> Tensor:
    """
    parallel: 두 가지 출력을 합(또는 concat-project)한 뒤 layer norm.
    fourier-only / attention-only: 해당 가지만. none: 항등.
    """
    try:
        mode = DeepExtractMode(mode)
    except ValueError:
        raise ConfigurationError(f"unknown deep-extract mode '{mode}'") from None

    if mode == DeepExtractMode.NONE:
        return fused
    if mode == DeepExtractMode.FOURIER_ONLY:
        return params.fourier(fused)
    if mode == DeepExtractMode.ATTENTION_ONLY:
        return params.attention(fused, attention_log=attention_log)

    attended = params.attention(fused, attention_log=attention_log)
    mixed = params.fourier(fused)
    if params.merge == MergeMode.CONCAT_PROJECT:
        merged = concat([attended, mixed], axis=-1) @ params.merge_weight + params.merge_bias
    else:
        merged = attended + mixed
    return params.merge_norm(merged)


# =============================================================================
# 분류기
# =============================================================================

class ClassifierParams(ParamGroup):
    """4층 MLP: 평탄화 폭 → 256 → 128 → 64 → 3"""

    def __init__(self, rng: np.random.Generator, input_width: int, hidden, num_classes: int):
        super().__init__()
        dims = [input_width] + list(hidden) + [num_classes]
        self.layers = [
            self.child(f"layer{i}", Dense(rng, fan_in, fan_out))
            for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:]))
        ]

    @property
    def input_width(self) -> int:
        return self.layers[0].fan_in


def classify(tokens: Tensor, params: ClassifierParams) -> Tensor:
    """토큰을 평탄화해 MLP 통과. 마지막 층에는 활성화 없음"""
    b = tokens.shape[0]
    width = int(np.prod(tokens.shape[1:]))
    if width != params.input_width:
        raise ConfigurationError(
            f"classifier expects flattened width {params.input_width}, got {width} from shape {tokens.shape}"
        )
    x = reshape(tokens, (b, width))
    for i, layer in enumerate(params.layers):
        x = layer(x)
        if i < len(params.layers) - 1:
            x = relu(x)
    return x


# =============================================================================
# 전체 네트워크
# =============================================================================

class NetworkParams(ParamGroup):
    """한 (ModelConfig, VariantSpec, 입력 폭) 조합의 전체 파라미터"""

    def __init__(self, rng: np.random.Generator, config: ModelConfig, variant: VariantSpec,
                 input_widths: Dict[Modality, int]):
        super().__init__()
        layout = config.layout()
        active = {m: int(input_widths[m]) for m in variant.modalities}
        self.layout = layout
        self.positional = None
        self.encoders = self.child("encoders", EncoderParams(rng, active, config))

        self.modality_blocks: Dict[Modality, SelfAttentionBlock] = {}
        if variant.modality_self_attention:
            group = self.child("modality_attention", ParamGroup())
            for m in variant.modalities:
                self.modality_blocks[m] = group.child(m.value, SelfAttentionBlock(
                    rng, layout.token_dim, config.ffn_hidden, config.num_heads, config.layer_norm_eps,
                ))

        self.fusion = None
        if variant.fusion != FusionMode.NONE:
            self.fusion = self.child("fusion", FusionParams(
                rng, config.feature_dim, symmetric=variant.fusion == FusionMode.SYMMETRIC,
            ))

        self.deep = None
        if variant.deep_extract != DeepExtractMode.NONE:
            self.deep = self.child("deep", DeepExtractParams(rng, config, layout, variant.deep_extract))

        width = variant.token_count(layout.n_tokens) * layout.token_dim
        self.classifier = self.child("classifier", ClassifierParams(
            rng, width, config.classifier_hidden, config.num_classes,
        ))


def forward(
    batch: ModalBatch,
    variant: VariantSpec,
    params: NetworkParams,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """encode → tokenize → fuse → deep_extract → classify. 결과는 (b, 3) logits"""
    layout = params.layout
    if params.positional is None:
        params.positional = sinusoidal_encoding(layout.n_tokens, layout.token_dim)

    features = encode_modalities(batch, params.encoders)
    tokens = {m: tokenize(features[m], layout, params.positional) for m in variant.modalities}
    if variant.modality_self_attention:
        tokens = {m: params.modality_blocks[m](t, attention_log=attention_log) for m, t in tokens.items()}

    fused = fuse(tokens, params.fusion, variant.fusion, num_heads=num_heads, attention_log=attention_log)
    deep = deep_extract(fused, params.deep, variant.deep_extract, attention_log=attention_log)
    return classify(deep, params.classifier)


class AcmcaNetwork:
    """파라미터와 설정을 묶은 모델 객체"""

    def __init__(self, config: ModelConfig, variant: VariantSpec, input_widths: Dict, seed: int = 0):
        self.config = config
        self.variant = variant
        self.input_widths = {Modality(k): int(v) for k, v in input_widths.items()}
        missing = [m.value for m in variant.modalities if m not in self.input_widths]
        if missing:
            raise ConfigurationError(f"input widths missing for modalities {missing}")
        self.seed = seed
        self.params = NetworkParams(np.random.default_rng(seed), config, variant, self.input_widths)
        logger.debug(f"🧠 {variant.name}: {self.num_parameters()} parameters")

    @classmethod
    def for_batch(cls, config: ModelConfig, variant: VariantSpec, batch: ModalBatch, seed: int = 0) -> "AcmcaNetwork":
        return cls(config, variant, {m: batch.features(m).shape[1] for m in Modality}, seed=seed)

    def named_parameters(self):
        return list(self.params.named_parameters())

    def parameters(self) -> List[Tensor]:
        return self.params.parameters()

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def forward(self, batch: ModalBatch, attention_log: Optional[list] = None) -> Tensor:
        return forward(batch, self.variant, self.params, num_heads=self.config.num_heads,
                       attention_log=attention_log)

    __call__ = forward

    def predict_proba(self, batch: ModalBatch) -> np.ndarray:
        with no_grad():
            return softmax(self.forward(batch), axis=-1).data

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            raise ConfigurationError(f"parameter names differ: missing {missing[:5]}, unexpected {extra[:5]}")
        for name, tensor in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ConfigurationError(f"parameter {name}: shape {value.shape} != {tensor.shape}")
            tensor.data = value.copy()
