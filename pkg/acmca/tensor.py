"""
Tensor 모듈 - float64 텐서와 역전파(reverse-mode autodiff)

각 연산은 출력 텐서에 Node(연산 이름, 입력, backward 함수, 실행 순번)를 붙인다.
backward는 손실에서 도달 가능한 Node를 실행 순번의 역순으로 방문한다.
"""
from __future__ import annotations

import contextvars
import itertools
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NumericError, ShapeError, UsageError
from .fourier import fourier_mix_2d

ArrayLike = Union[np.ndarray, Sequence, float, int]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

# 실행 순번 (스레드 간 공유되어도 단조 증가만 보장하면 된다)
_sequence = itertools.count()
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)


@contextmanager
def no_grad():
    """그래프 기록을 끄는 컨텍스트 (평가용)"""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


@dataclass(eq=False)
class Node:
    """실행된 미분 가능 연산 한 건"""
    op: str
    parents: Tuple["Tensor", ...]
    backward_fn: BackwardFn
    seq: int


class Tensor:
    """row-major float64 버퍼와 선택적 gradient 누적기"""

    __slots__ = ("data", "requires_grad", "grad", "_node", "name")

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._node: Optional[Node] = None
        self.name = name

    # ------------------------------------------------------------------ 속성
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise UsageError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # ------------------------------------------------------------------ 연산자
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise UsageError("Tensor division is only defined for scalar divisors")
        return scale(self, 1.0 / float(other))

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes: Optional[Sequence[int]] = None) -> "Tensor":
        return transpose(self, axes)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def relu(self) -> "Tensor":
        return relu(self)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def record(data: np.ndarray, parents: Sequence[Tensor], op: str, backward_fn: BackwardFn) -> Tensor:
    """연산 결과 텐서를 만들고, 필요하면 그래프에 Node를 기록"""
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._node = Node(op=op, parents=tuple(parents), backward_fn=backward_fn, seq=next(_sequence))
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """브로드캐스트된 gradient를 원래 형상으로 합산"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable") from None


# =============================================================================
# 요소별 연산
# =============================================================================

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return record(
        a.data + b.data, (a, b), "add",
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    return record(
        a.data - b.data, (a, b), "sub",
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    return record(
        a.data * b.data, (a, b), "mul",
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def scale(x: Tensor, factor: float) -> Tensor:
    return record(x.data * factor, (x,), "scale", lambda g: (g * factor,))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record(np.where(mask, x.data, 0.0), (x,), "relu", lambda g: (g * mask,))


# =============================================================================
# 행렬/구조 연산
# =============================================================================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[.., n, k] · [.., k, m] → [.., n, m] (앞쪽 배치 축은 브로드캐스트)"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul: batch dimensions of {a.shape} and {b.shape} are not broadcastable") from None

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return record(a.data @ b.data, (a, b), "matmul", backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {x.shape} into {shape}") from None
    original = x.shape
    return record(out.copy(), (x,), "reshape", lambda g: (g.reshape(original),))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """축 순열. axes가 없으면 마지막 두 축을 교환"""
    if axes is None:
        if x.ndim < 2:
            raise ShapeError(f"transpose: need at least 2 dimensions, got shape {x.shape}")
        axes = list(range(x.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation for shape {x.shape}")
    inverse = tuple(np.argsort(axes))
    return record(np.transpose(x.data, axes).copy(), (x,), "transpose", lambda g: (np.transpose(g, inverse),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise UsageError("concat requires at least one tensor")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise ShapeError(
                f"concat: shapes {[t.shape for t in tensors]} differ outside axis {axis}"
            )
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, "concat", backward)


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    original = x.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, original).copy(),)

    return record(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), "sum", backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[a] for a in axes]))
    return scale(sum_(x, axis=axis, keepdims=keepdims), 1.0 / count)


# =============================================================================
# 신경망 연산
# =============================================================================

def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """슬라이스별 최대값을 빼고 지수화 (오버플로 방지)"""
    if not np.all(np.isfinite(x.data)):
        raise NumericError("softmax received non-finite input")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    y = exp / exp.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return record(y, (x,), "softmax", backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, axis: int = -1, eps: float = 1e-5) -> Tensor:
    """
    axis 방향 슬라이스별 평균 0, 분산 1 정규화 후 gain/bias 적용.
    분산이 0인 슬라이스는 bias를 그대로 돌려준다.
    """
    axis = axis % x.ndim
    n = x.shape[axis]
    if gain.shape != (n,) or bias.shape != (n,):
        raise ShapeError(
            f"layer_norm: gain {gain.shape} and bias {bias.shape} must both be ({n},)"
        )
    if eps <= 0:
        raise UsageError("layer_norm eps must be positive")

    param_shape = [1] * x.ndim
    param_shape[axis] = n
    g_b = gain.data.reshape(param_shape)
    b_b = bias.data.reshape(param_shape)

    mu = x.data.mean(axis=axis, keepdims=True)
    centered = x.data - mu
    var = (centered ** 2).mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = xhat * g_b + b_b
    reduce_axes = tuple(i for i in range(x.ndim) if i != axis)

    def backward(g):
        g_xhat = g * g_b
        gx = (inv_std / n) * (
            n * g_xhat
            - g_xhat.sum(axis=axis, keepdims=True)
            - xhat * (g_xhat * xhat).sum(axis=axis, keepdims=True)
        )
        g_gain = (g * xhat).sum(axis=reduce_axes)
        g_bias = g.sum(axis=reduce_axes)
        return gx, g_gain, g_bias

    return record(out, (x, gain, bias), "layer_norm", backward)


def fourier_mix(x: Tensor) -> Tensor:
    """
    FNet 혼합 Re(F_T · X · F_D). DFT 행렬은 대칭이므로 이 선형 사상은
    자기 수반(self-adjoint)이고, backward도 같은 혼합을 gradient에 적용한다.
    """
    if x.ndim < 2:
        raise ShapeError(f"fourier_mix expects (.., tokens, features), got shape {x.shape}")
    return record(fourier_mix_2d(x.data), (x,), "fourier_mix", lambda g: (fourier_mix_2d(g),))


# =============================================================================
# 그래프와 역전파
# =============================================================================

@dataclass
class Graph:
    """손실에서 도달 가능한 연산 기록 (실행 역순)"""
    outputs: List[Tensor] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> "Graph":
        seen = set()
        found: List[Tensor] = []
        stack = [root]
        while stack:
            t = stack.pop()
            if id(t) in seen or t._node is None:
                continue
            seen.add(id(t))
            found.append(t)
            stack.extend(t._node.parents)
        found.sort(key=lambda t: t._node.seq, reverse=True)
        return cls(outputs=found)

    @property
    def ops(self) -> List[str]:
        return [t._node.op for t in self.outputs]

    def leaves(self) -> List[Tensor]:
        out, seen = [], set()
        for t in self.outputs:
            for p in t._node.parents:
                if p.is_leaf and p.requires_grad and id(p) not in seen:
                    seen.add(id(p))
                    out.append(p)
        return out

    def __len__(self) -> int:
        return len(self.outputs)


def backward(loss: Tensor) -> None:
    """
    스칼라 손실에서 역전파. leaf의 grad는 더해지며, 호출자가 단계 사이에 0으로 초기화해야 한다.
    requires_grad leaf가 없는 그래프는 아무 일도 하지 않는다.
    """
    if loss.size != 1:
        raise UsageError(f"backward requires a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    if loss.is_leaf:
        seed = np.ones_like(loss.data)
        loss.grad = seed if loss.grad is None else loss.grad + seed
        return

    graph = Graph.trace(loss)
    pending = {id(loss): np.ones_like(loss.data)}
    for out in graph.outputs:
        g = pending.pop(id(out), None)
        if g is None:
            continue
        parent_grads = out._node.backward_fn(g)
        for parent, pg in zip(out._node.parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            if parent.is_leaf:
                parent.grad = pg.copy() if parent.grad is None else parent.grad + pg
            else:
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
