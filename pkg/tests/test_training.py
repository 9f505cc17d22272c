"""
Training Engine Tests
=====================

교차 엔트로피, 옵티마이저 갱신, 결정적 학습 루프, 학습 산출물, 스윕 검증.
"""
import math

import numpy as np
import pytest

from acmca.data import build_dataset, synth_cohort
from acmca.errors import ConfigurationError, InternalError, UsageError
from acmca.gradcheck import gradcheck
from acmca.tensor import Tensor
from acmca.training import (
    Adam, EpochRecord, SGD, TrainConfig, TrainLog, build_optimizer, cross_entropy, evaluate_accuracy, sweep, train,
)
from acmca.variants import VariantSpec
from utils import read_csv_with_metadata


@pytest.fixture
def quick_config(small_config):
    """2 에폭, d=16"""
    return TrainConfig(
        epochs=2, batch_size=16, feature_dim=16, learning_rate=1e-3, seed=11,
        model=small_config, variant=VariantSpec.named("acmca"),
    )


# =============================================================================
# 손실
# =============================================================================

class TestCrossEntropy:

    def test_uniform_logits(self):
        """균등 logits의 손실은 ln 3"""
        loss = cross_entropy(Tensor(np.zeros((4, 3))), [0, 1, 2, 0])
        assert loss.item() == pytest.approx(math.log(3))

    def test_known_probability(self):
        logits = Tensor(np.log([[0.7, 0.2, 0.1]]))
        assert cross_entropy(logits, [0]).item() == pytest.approx(-math.log(0.7))

    def test_gradient(self, rng):
        """∂L/∂z = (p − onehot)/N"""
        logits = Tensor(rng.normal(size=(5, 3)), requires_grad=True)
        labels = [0, 2, 1, 1, 0]
        assert gradcheck(lambda: cross_entropy(logits, labels), [logits])

    def test_label_range_checked(self):
        with pytest.raises(UsageError):
            cross_entropy(Tensor(np.zeros((2, 3))), [0, 3])


# =============================================================================
# 옵티마이저
# =============================================================================

class TestOptimizers:

    def test_sgd_step(self):
        """θ = 1.0, g = 0.5, lr = 0.1 → 0.95"""
        p = Tensor([1.0], requires_grad=True)
        p.grad = np.array([0.5])
        SGD([p], lr=0.1).step()
        assert p.data[0] == pytest.approx(0.95)

    def test_adam_first_step_is_lr(self):
        """편향 보정 후 첫 갱신 크기 ≈ lr (부호는 gradient 반대)"""
        p = Tensor([1.0, -2.0], requires_grad=True)
        p.grad = np.array([0.3, -40.0])
        Adam([p], lr=0.01).step()
        np.testing.assert_allclose(p.data, [0.99, -1.99], atol=1e-6)

    def test_parameters_without_grad_untouched(self):
        p = Tensor([1.0], requires_grad=True)
        Adam([p], lr=0.1).step()
        assert p.data[0] == 1.0

    def test_unknown_optimizer(self):
        with pytest.raises(ConfigurationError):
            build_optimizer("rmsprop", [], 0.1)


# =============================================================================
# 학습 루프
# =============================================================================

class TestTrainLoop:

    def test_deterministic(self, synthetic_dataset, quick_config):
        """같은 시드 → 같은 에폭 기록"""
        _, first = train(synthetic_dataset, quick_config, progress=False)
        _, second = train(synthetic_dataset, quick_config, progress=False)
        assert first.rows() == second.rows()

    def test_artifacts(self, tmp_path, synthetic_dataset, quick_config):
        _, log = train(synthetic_dataset, quick_config, output_dir=tmp_path, progress=False)
        for name in ("best.json", "final.json", "train_log.csv", "timing.json"):
            assert (tmp_path / name).exists()
        metadata, frame = read_csv_with_metadata(tmp_path / "train_log.csv")
        assert list(frame.columns) == ["epoch", "loss", "train_acc", "eval_acc"]
        assert frame["epoch"].tolist() == [1, 2]
        assert frame["loss"].tolist() == pytest.approx([row[1] for row in log.rows()], abs=1e-8)
        assert metadata["variant"] == "acmca"
        assert 1 <= log.best_epoch <= 2

    def test_progress_lines(self, capsys, synthetic_dataset, quick_config):
        train(synthetic_dataset, quick_config.model_copy(update={"epochs": 1}))
        assert "epoch=1 loss=" in capsys.readouterr().err

    def test_non_square_feature_dim(self, synthetic_dataset, quick_config):
        with pytest.raises(ConfigurationError):
            train(synthetic_dataset, quick_config.model_copy(update={"feature_dim": 90}), progress=False)

    def test_log_order_enforced(self):
        log = TrainLog(variant="acmca")
        log.append(EpochRecord(1, 1.0, 0.3, 0.3))
        with pytest.raises(InternalError):
            log.append(EpochRecord(3, 0.9, 0.4, 0.4))

    @pytest.mark.slow
    def test_learns_synthetic_clusters(self, synthetic_dataset, quick_config):
        """분리된 군집에서 손실이 줄고 우연 수준(1/3)을 넘는다"""
        config = quick_config.model_copy(update={"epochs": 30, "batch_size": 8, "learning_rate": 3e-3})
        _, log = train(synthetic_dataset, config, progress=False)
        assert log.records[-1].loss < log.records[0].loss
        assert log.best_eval_acc > 0.5

    @pytest.mark.slow
    def test_full_model_on_default_cohort(self):
        """클래스당 60명, 분리도 3.0, 기본 하이퍼파라미터 50 에폭 → 테스트 정확도 0.90 이상"""
        cohort = synth_cohort(seed=7)
        dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=7)
        network, _ = train(dataset, TrainConfig(epochs=50, seed=7), progress=False)
        accuracy = evaluate_accuracy(network, dataset.test)
        assert accuracy >= 0.90

    @pytest.mark.slow
    def test_no_signal_cohort_stays_near_chance(self):
        """분리도 0: 같은 설정으로 학습해도 테스트 정확도는 0.33 ± 0.10"""
        cohort = synth_cohort(seed=7, n_per_class=150, snp_count=60, class_separation=0.0)
        dataset, _ = build_dataset(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, seed=7)
        assert dataset.test.class_counts() == [30, 30, 30]
        network, _ = train(dataset, TrainConfig(epochs=50, seed=7), progress=False)
        accuracy = evaluate_accuracy(network, dataset.test)
        assert abs(accuracy - 1 / 3) <= 0.10


# =============================================================================
# 스윕
# =============================================================================

class TestSweep:

    def test_all_values_validated_first(self, tmp_path, synthetic_dataset, quick_config):
        """90이 섞여 있으면 어떤 실행도 시작하지 않는다"""
        with pytest.raises(ConfigurationError):
            sweep("feature_dim", [16, 90], synthetic_dataset, quick_config, output_dir=tmp_path)
        assert not (tmp_path / "feature_dim_16").exists()

    def test_unknown_axis(self, synthetic_dataset):
        with pytest.raises(UsageError):
            sweep("dropout", [1], synthetic_dataset)

    def test_epoch_sweep(self, synthetic_dataset, quick_config):
        result = sweep("epochs", [1, 2], synthetic_dataset, quick_config)
        frame = result.to_frame()
        assert list(frame.columns) == ["epochs", "test_accuracy"]
        assert frame["epochs"].tolist() == [1, 2]
        assert frame["test_accuracy"].between(0, 1).all()
