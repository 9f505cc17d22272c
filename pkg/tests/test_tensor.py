"""
Tensor Core Tests
=================

역전파 그래프와 각 미분 가능 연산의 forward 값/gradient 검사.

GRADIENT TESTING:
모든 연산은 중심 유한차분(gradcheck)과 analytic gradient가 일치해야 한다.
"""
import numpy as np
import pytest

from acmca.errors import NumericError, ShapeError, UsageError
from acmca.gradcheck import gradcheck, numerical_gradient, relative_error
from acmca.tensor import (
    Graph, Tensor, add, backward, concat, fourier_mix, layer_norm, matmul, mean, mul, no_grad, relu, reshape,
    softmax, sub, sum_, transpose, zero_grad,
)


def param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


@pytest.fixture(params=range(20))
def seeded_rng(request):
    """시드 0..19의 독립 난수 인스턴스"""
    return np.random.default_rng(request.param)


# =============================================================================
# Forward 값
# =============================================================================

class TestForward:
    """연산 결과값"""

    def test_broadcast_add(self):
        """(2,3) + (3,) 브로드캐스트"""
        a = Tensor(np.ones((2, 3)))
        b = Tensor([1.0, 2.0, 3.0])
        np.testing.assert_allclose(add(a, b).data, [[2, 3, 4], [2, 3, 4]])

    def test_incompatible_shapes_raise(self):
        with pytest.raises(ShapeError):
            add(Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_softmax_rows_sum_to_one(self, rng):
        """각 행의 합은 1, 큰 입력에서도 유한"""
        x = Tensor(rng.normal(size=(4, 5)) * 300.0)
        y = softmax(x, axis=-1).data
        assert np.all(np.isfinite(y))
        np.testing.assert_allclose(y.sum(axis=-1), np.ones(4), atol=1e-12)

    def test_softmax_shift_invariant(self, seeded_rng):
        """슬라이스마다 상수를 더해도 결과가 같다"""
        x = seeded_rng.normal(size=(4, 6)) * 5.0
        shift = seeded_rng.normal(size=(4, 1)) * 50.0
        np.testing.assert_allclose(
            softmax(Tensor(x + shift), axis=-1).data, softmax(Tensor(x), axis=-1).data, atol=1e-12,
        )

    def test_softmax_rejects_non_finite(self):
        with pytest.raises(NumericError):
            softmax(Tensor([[1.0, np.nan]]))

    def test_layer_norm_normalizes(self, rng):
        """gain=1, bias=0이면 슬라이스 평균 0, 분산 ≈ 1"""
        x = Tensor(rng.normal(loc=3.0, scale=2.0, size=(3, 8)))
        y = layer_norm(x, Tensor(np.ones(8)), Tensor(np.zeros(8))).data
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-10)
        np.testing.assert_allclose(y.var(axis=-1), 1.0, atol=1e-4)

    def test_layer_norm_constant_slice_returns_bias(self):
        x = Tensor(np.full((2, 4), 5.0))
        bias = Tensor([0.1, 0.2, 0.3, 0.4])
        y = layer_norm(x, Tensor(np.ones(4)), bias).data
        np.testing.assert_allclose(y, np.tile(bias.data, (2, 1)))

    def test_layer_norm_gain_shape_checked(self):
        with pytest.raises(ShapeError):
            layer_norm(Tensor(np.ones((2, 4))), Tensor(np.ones(3)), Tensor(np.zeros(4)))

    def test_reshape_transpose_round_trip(self, rng):
        """reshape 후 되돌리면 원래 버퍼"""
        x = Tensor(rng.normal(size=(2, 3, 4)))
        back = reshape(reshape(x, (6, 4)), (2, 3, 4))
        np.testing.assert_array_equal(back.data, x.data)
        np.testing.assert_array_equal(transpose(transpose(x)).data, x.data)

    def test_transpose_default_swaps_last_axes(self):
        x = Tensor(np.arange(24.0).reshape(2, 3, 4))
        assert transpose(x).shape == (2, 4, 3)

    def test_scalar_division_only(self):
        x = Tensor([2.0, 4.0])
        np.testing.assert_allclose((x / 2).data, [1.0, 2.0])
        with pytest.raises(UsageError):
            x / Tensor([1.0, 2.0])

    def test_item_requires_single_element(self):
        with pytest.raises(UsageError):
            Tensor([1.0, 2.0]).item()


# =============================================================================
# Gradient 검사
# =============================================================================

class TestGradients:
    """연산별 gradcheck"""

    def test_elementwise(self, seeded_rng):
        a, b = param(seeded_rng, 3, 4), param(seeded_rng, 4)
        assert gradcheck(lambda: sum_(mul(add(a, b), sub(a, b))), [a, b])

    def test_relu(self, seeded_rng):
        x = param(seeded_rng, 5, 3)
        w = Tensor(seeded_rng.normal(size=(5, 3)))
        assert gradcheck(lambda: sum_(mul(relu(x), w)), [x])

    def test_matmul_batched(self, seeded_rng):
        """앞쪽 배치 축이 브로드캐스트되는 행렬곱"""
        a, b = param(seeded_rng, 2, 3, 4), param(seeded_rng, 4, 5)
        assert gradcheck(lambda: sum_(mul(matmul(a, b), matmul(a, b))), [a, b])

    def test_reshape_transpose_concat(self, seeded_rng):
        a, b = param(seeded_rng, 2, 3), param(seeded_rng, 2, 2)
        w = Tensor(seeded_rng.normal(size=(5, 2)))
        assert gradcheck(lambda: sum_(mul(transpose(concat([a, b], axis=1)), w)), [a, b])
        x = param(seeded_rng, 2, 6)
        assert gradcheck(lambda: sum_(mul(reshape(x, (3, 4)), reshape(x, (3, 4)))), [x])

    def test_mean_with_axis(self, seeded_rng):
        x = param(seeded_rng, 3, 4)
        w = Tensor(seeded_rng.normal(size=(4,)))
        assert gradcheck(lambda: sum_(mul(mean(x, axis=0), w)), [x])

    def test_softmax(self, seeded_rng):
        x = param(seeded_rng, 3, 4)
        w = Tensor(seeded_rng.normal(size=(3, 4)))
        assert gradcheck(lambda: sum_(mul(softmax(x, axis=-1), w)), [x])

    def test_layer_norm(self, seeded_rng):
        x, gain, bias = param(seeded_rng, 3, 5), param(seeded_rng, 5), param(seeded_rng, 5)
        w = Tensor(seeded_rng.normal(size=(3, 5)))
        assert gradcheck(lambda: sum_(mul(layer_norm(x, gain, bias), w)), [x, gain, bias])

    def test_fourier_mix(self, seeded_rng):
        """혼합은 선형이고 backward는 같은 혼합을 적용한다"""
        x = param(seeded_rng, 2, 4, 3)
        w = Tensor(seeded_rng.normal(size=(2, 4, 3)))
        assert gradcheck(lambda: sum_(mul(fourier_mix(x), w)), [x])

    def test_fourier_mix_requires_two_dims(self):
        with pytest.raises(ShapeError):
            fourier_mix(Tensor([1.0, 2.0]))

    def test_numerical_gradient_subset(self, rng):
        """indices를 주면 나머지 원소는 0"""
        x = param(rng, 2, 2)
        grad = numerical_gradient(lambda: sum_(mul(x, x)), x, indices=[(0, 1)])
        assert grad[0, 0] == 0.0
        assert relative_error(np.array([grad[0, 1]]), np.array([2 * x.data[0, 1]])) < 1e-6


# =============================================================================
# 그래프와 역전파
# =============================================================================

class TestBackward:
    """역전파 순서, 누적, 그래프 기록 규칙"""

    def test_ops_visited_in_reverse_execution_order(self, rng):
        x, w = param(rng, 2, 3), param(rng, 3, 2)
        loss = sum_(relu(matmul(x, w)))
        graph = Graph.trace(loss)
        assert graph.ops == ["sum", "relu", "matmul"]
        seqs = [t._node.seq for t in graph.outputs]
        assert seqs == sorted(seqs, reverse=True)
        assert {id(t) for t in graph.leaves()} == {id(x), id(w)}

    def test_shared_parent_gradient_sums(self):
        """같은 텐서를 두 번 쓰면 gradient가 합쳐진다"""
        x = Tensor([3.0], requires_grad=True)
        backward(sum_(add(mul(x, x), x)))
        np.testing.assert_allclose(x.grad, [7.0])

    def test_gradients_accumulate_until_zeroed(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward(sum_(x * 3.0))
        backward(sum_(x * 3.0))
        np.testing.assert_allclose(x.grad, [6.0, 6.0])
        zero_grad([x])
        assert x.grad is None

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(UsageError):
            backward(Tensor([1.0, 2.0], requires_grad=True) * 2.0)

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = x * 2.0
        assert y.is_leaf and not y.requires_grad

    def test_constant_graph_is_noop(self):
        """requires_grad leaf가 없으면 아무 일도 하지 않는다"""
        x = Tensor([1.0, 2.0])
        backward(sum_(x))
        assert x.grad is None
