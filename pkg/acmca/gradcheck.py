"""
중심 유한차분 gradient 검사 도구
"""
from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tensor, backward


def numerical_gradient(
    fn: Callable[[], Tensor],
    tensor: Tensor,
    h: float = 1e-6,
    indices: Optional[Sequence[tuple]] = None,
) -> np.ndarray:
    """
    스칼라 함수 fn()의 tensor에 대한 중심 유한차분 gradient.

    Args:
        fn: 인자 없이 스칼라 Tensor를 반환하는 함수 (tensor.data를 읽어야 함)
        tensor: 섭동할 텐서
        h: 차분 간격
        indices: 지정하면 해당 원소만 계산 (나머지는 0)

    Returns:
        np.ndarray: tensor와 같은 형상의 gradient 추정치
    """
    grad = np.zeros_like(tensor.data)
    targets = indices if indices is not None else list(np.ndindex(*tensor.shape))
    for idx in targets:
        original = tensor.data[idx]
        tensor.data[idx] = original + h
        plus = fn().item()
        tensor.data[idx] = original - h
        minus = fn().item()
        tensor.data[idx] = original
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def analytic_gradients(fn: Callable[[], Tensor], params: Sequence[Tensor]) -> list:
    for p in params:
        p.grad = None
    loss = fn()
    backward(loss)
    return [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max |a-n| / max(|a|+|n|, floor) 원소별 최대값"""
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradcheck(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    rtol: float = 1e-4,
    atol: float = 1e-7,
    h: float = 1e-6,
) -> bool:
    """모든 파라미터에 대해 analytic gradient와 유한차분이 일치하는지 확인"""
    grads = analytic_gradients(fn, params)
    for p, g in zip(params, grads):
        numeric = numerical_gradient(fn, p, h=h)
        if not np.allclose(g, numeric, rtol=rtol, atol=atol):
            return False
    return True
