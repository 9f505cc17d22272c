"""
신경망 구성 요소 - 파라미터 묶음, 초기화, 어텐션, 트랜스포머/FNet 블록
"""
import math
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ShapeError
from .tensor import (
    Tensor, concat, fourier_mix, layer_norm, matmul, relu, reshape, softmax, transpose,
)


# =============================================================================
# 파라미터 관리
# =============================================================================

def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    """uniform(−a, a), a = sqrt(6/(fan_in+fan_out))"""
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-a, a, size=(fan_in, fan_out)), requires_grad=True)


def zeros_param(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones_param(*shape: int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


class ParamGroup:
    """이름이 붙은 학습 파라미터와 하위 묶음의 트리"""

    def __init__(self):
        self._tensors: Dict[str, Tensor] = {}
        self._children: Dict[str, "ParamGroup"] = {}

    def param(self, name: str, tensor: Tensor) -> Tensor:
        tensor.name = name
        self._tensors[name] = tensor
        return tensor

    def child(self, name: str, group: "ParamGroup") -> "ParamGroup":
        self._children[name] = group
        return group

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._tensors.items():
            yield f"{prefix}{name}", tensor
        for name, group in self._children.items():
            yield from group.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_parameters()]


class Dense(ParamGroup):
    """y = x·W + b"""

    def __init__(self, rng: np.random.Generator, fan_in: int, fan_out: int):
        super().__init__()
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.weight = self.param("weight", glorot_uniform(rng, fan_in, fan_out))
        self.bias = self.param("bias", zeros_param(fan_out))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.fan_in:
            raise ShapeError(f"dense layer expects width {self.fan_in}, got shape {x.shape}")
        return matmul(x, self.weight) + self.bias


class LayerNormParams(ParamGroup):
    def __init__(self, width: int, eps: float):
        super().__init__()
        self.eps = eps
        self.gain = self.param("gain", ones_param(width))
        self.bias = self.param("bias", zeros_param(width))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, axis=-1, eps=self.eps)


class FeedForward(ParamGroup):
    """Linear → ReLU → Linear"""

    def __init__(self, rng: np.random.Generator, width: int, hidden: int):
        super().__init__()
        self.inner = self.child("inner", Dense(rng, width, hidden))
        self.outer = self.child("outer", Dense(rng, hidden, width))

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(relu(self.inner(x)))


# =============================================================================
# 위치 인코딩과 어텐션
# =============================================================================

def sinusoidal_encoding(n_tokens: int, token_dim: int) -> np.ndarray:
    """PE[pos, 2i] = sin(pos/10000^(2i/d)), PE[pos, 2i+1] = cos(pos/10000^(2i/d))"""
    positions = np.arange(n_tokens)[:, None]
    i = np.arange(token_dim)[None, :]
    angle = positions / np.power(10000.0, (2 * (i // 2)) / token_dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    num_heads: int = 1,
    attention_log: Optional[list] = None,
) -> Tensor:
    """
    softmax(Q·Kᵀ/√d_k)·V. 헤드가 여러 개면 마지막 축을 나눠 계산 후 다시 합친다.

    Args:
        q: (b, n_q, d) query
        k: (b, n_k, d) key
        v: (b, n_k, d) value
        num_heads: 헤드 수 (d를 나눠야 함)
        attention_log: 주어지면 (b, heads, n_q, n_k) 가중치 배열을 추가

    Returns:
        Tensor: (b, n_q, d)
    """
    b, n_q, d = q.shape
    n_k = k.shape[1]
    if k.shape[-1] != d or v.shape[:2] != k.shape[:2]:
        raise ShapeError(f"attention: incompatible q {q.shape}, k {k.shape}, v {v.shape}")
    dh = d // num_heads

    if num_heads > 1:
        q = transpose(reshape(q, (b, n_q, num_heads, dh)), (0, 2, 1, 3))
        k = transpose(reshape(k, (b, n_k, num_heads, dh)), (0, 2, 1, 3))
        v = transpose(reshape(v, (b, n_k, num_heads, v.shape[-1] // num_heads)), (0, 2, 1, 3))

    scores = matmul(q, transpose(k)) * (1.0 / math.sqrt(dh))
    weights = softmax(scores, axis=-1)
    if attention_log is not None:
        w = weights.data if num_heads > 1 else weights.data[:, None]
        attention_log.append(w.copy())
    out = matmul(weights, v)

    if num_heads > 1:
        out = reshape(transpose(out, (0, 2, 1, 3)), (b, n_q, -1))
    return out


# =============================================================================
# 블록
# =============================================================================

class SelfAttentionBlock(ParamGroup):
    """단일(또는 다중) 헤드 self-attention + 잔차/LN + FFN + 잔차/LN"""

    def __init__(self, rng: np.random.Generator, token_dim: int, ffn_hidden: int, num_heads: int, eps: float):
        super().__init__()
        self.num_heads = num_heads
        self.w_q = self.param("w_q", glorot_uniform(rng, token_dim, token_dim))
        self.w_k = self.param("w_k", glorot_uniform(rng, token_dim, token_dim))
        self.w_v = self.param("w_v", glorot_uniform(rng, token_dim, token_dim))
        self.w_o = self.param("w_o", glorot_uniform(rng, token_dim, token_dim))
        self.norm_1 = self.child("norm_1", LayerNormParams(token_dim, eps))
        self.ffn = self.child("ffn", FeedForward(rng, token_dim, ffn_hidden))
        self.norm_2 = self.child("norm_2", LayerNormParams(token_dim, eps))

    def __call__(self, x: Tensor, attention_log: Optional[list] = None) -> Tensor:
        attended = attention(
            matmul(x, self.w_q), matmul(x, self.w_k), matmul(x, self.w_v),
            num_heads=self.num_heads, attention_log=attention_log,
        )
        x = self.norm_1(x + matmul(attended, self.w_o))
        return self.norm_2(x + self.ffn(x))


class FourierBlock(ParamGroup):
    """FNet 블록: 2D DFT 실수부 혼합 + 잔차/LN + FFN + 잔차/LN"""

    def __init__(self, rng: np.random.Generator, token_dim: int, ffn_hidden: int, eps: float):
        super().__init__()
        self.norm_1 = self.child("norm_1", LayerNormParams(token_dim, eps))
        self.ffn = self.child("ffn", FeedForward(rng, token_dim, ffn_hidden))
        self.norm_2 = self.child("norm_2", LayerNormParams(token_dim, eps))

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm_1(x + fourier_mix(x))
        return self.norm_2(x + self.ffn(x))


def concat_tokens(parts: List[Tensor]) -> Tensor:
    return parts[0] if len(parts) == 1 else concat(parts, axis=1)
