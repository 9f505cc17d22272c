"""
학습 엔진 - 교차 엔트로피, SGD/Adam, 학습 루프, 하이퍼파라미터 스윕
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from config import Config
from utils import print_progress, write_csv_with_metadata, write_json
from .checkpoint import save_checkpoint
from .data.batch import ModalBatch, iter_batches
from .data.cohort import PreparedDataset
from .errors import ConfigurationError, InternalError, NumericError, UsageError
from .model import AcmcaNetwork
from .tensor import Tensor, backward, no_grad, record, zero_grad
from .variants import ModelConfig, VariantSpec

logger = logging.getLogger(__name__)


# =============================================================================
# 손실
# =============================================================================

def cross_entropy(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """
    L = −(1/N) Σᵢ log p_{i,yᵢ}, p = softmax(logits). log-softmax로 계산하고
    logits에 대한 gradient는 (p − onehot)/N.

    Args:
        logits: (b, c) 점수
        labels: 길이 b 정수 라벨

    Returns:
        Tensor: 스칼라 손실
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise UsageError(f"cross_entropy: logits {logits.shape} and labels {labels.shape} do not align")
    n, c = logits.shape
    if n == 0:
        raise UsageError("cross_entropy needs at least one sample")
    if labels.min() < 0 or labels.max() >= c:
        raise UsageError(f"cross_entropy: labels must be in [0, {c - 1}], got range [{labels.min()}, {labels.max()}]")
    if not np.all(np.isfinite(logits.data)):
        raise NumericError("cross_entropy received non-finite logits")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    rows = np.arange(n)
    loss = -log_p[rows, labels].mean()

    def backward_fn(g):
        grad = np.exp(log_p)
        grad[rows, labels] -= 1.0
        return (g * grad / n,)

    return record(np.array(loss), (logits,), "cross_entropy", backward_fn)


# =============================================================================
# 옵티마이저
# =============================================================================

class Optimizer:
    """파라미터 리스트를 들고 step()에서 grad로 갱신"""

    def __init__(self, params: List[Tensor], lr: float):
        self.params = list(params)
        self.lr = lr

    def zero_grad(self) -> None:
        zero_grad(self.params)

    def _grads(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            if p.grad.shape != p.data.shape:
                raise InternalError(f"gradient shape {p.grad.shape} != parameter shape {p.data.shape} ({p.name})")
            yield i, p

    def step(self) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    """θ ← θ − lr·g"""

    def step(self) -> None:
        for _, p in self._grads():
            p.data = p.data - self.lr * p.grad


class Adam(Optimizer):
    """β = (0.9, 0.999), ε = 1e-8, bias correction"""

    def __init__(self, params: List[Tensor], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params, lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for i, p in self._grads():
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * p.grad
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * p.grad ** 2
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


OPTIMIZERS = {"sgd": SGD, "adam": Adam}


def build_optimizer(name: str, params: List[Tensor], lr: float) -> Optimizer:
    try:
        return OPTIMIZERS[name.lower()](params, lr)
    except KeyError:
        raise ConfigurationError(f"unknown optimizer '{name}'; choose from {sorted(OPTIMIZERS)}") from None


# =============================================================================
# 학습 설정과 기록
# =============================================================================

class TrainConfig(BaseModel):
    """학습 하이퍼파라미터 (기본값은 최적 파라미터 표)"""
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=Config.LEARNING_RATE, gt=0, description="학습률")
    batch_size: int = Field(default=Config.BATCH_SIZE, ge=1, description="배치 크기")
    epochs: int = Field(default=Config.EPOCHS, ge=1, description="에폭 수")
    feature_dim: int = Field(default=Config.FEATURE_DIM, ge=1, description="모달리티 특징 차원 d")
    optimizer: Literal["sgd", "adam"] = Field(default=Config.OPTIMIZER)
    seed: int = Field(default=Config.SEED)
    variant: VariantSpec = Field(default_factory=VariantSpec)
    model: ModelConfig = Field(default_factory=ModelConfig)

    def resolved_model(self) -> ModelConfig:
        """feature_dim을 반영한 ModelConfig (토큰 배치 검증 포함)"""
        resolved = ModelConfig(**{**self.model.model_dump(), "feature_dim": self.feature_dim})
        resolved.layout()
        return resolved


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    eval_acc: float
    wall_time: float = 0.0

    def progress_line(self) -> str:
        return f"epoch={self.epoch} loss={self.loss:.6f} train_acc={self.train_acc:.4f} eval_acc={self.eval_acc:.4f}"


@dataclass
class TrainLog:
    """에폭별 기록. CSV에는 실행 시간을 넣지 않는다 (timing.json에 별도 기록)"""
    variant: str
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_eval_acc: float = -1.0

    def append(self, record: EpochRecord) -> None:
        expected = len(self.records) + 1
        if record.epoch != expected:
            raise InternalError(f"epoch {record.epoch} recorded out of order (expected {expected})")
        self.records.append(record)
        if record.eval_acc > self.best_eval_acc:
            self.best_eval_acc = record.eval_acc
            self.best_epoch = record.epoch

    def rows(self) -> List[Tuple[int, float, float, float]]:
        """(epoch, loss, train_acc, eval_acc), 실행 시간 제외"""
        return [(r.epoch, r.loss, r.train_acc, r.eval_acc) for r in self.records]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows(), columns=["epoch", "loss", "train_acc", "eval_acc"])

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def write(self, directory: Union[str, Path], metadata: Optional[Dict] = None) -> Path:
        directory = Path(directory)
        meta = {"variant": self.variant, "best_epoch": self.best_epoch, "best_eval_acc": self.best_eval_acc}
        meta.update(metadata or {})
        write_json(directory / "timing.json", {
            "variant": self.variant,
            "epoch_seconds": [round(r.wall_time, 6) for r in self.records],
            "total_seconds": round(sum(r.wall_time for r in self.records), 6),
        })
        return write_csv_with_metadata(directory / "train_log.csv", self.to_frame(), meta, float_format="%.8f")


# =============================================================================
# 학습 루프
# =============================================================================

def evaluate_accuracy(network: AcmcaNetwork, batch: ModalBatch) -> float:
    """그래프 기록 없이 정확도 계산"""
    if len(batch) == 0:
        return 0.0
    with no_grad():
        logits = network.forward(batch).data
    return float((logits.argmax(axis=1) == batch.labels).mean())


def train(
    dataset: Union[PreparedDataset, ModalBatch],
    config: Optional[TrainConfig] = None,
    eval_batch: Optional[ModalBatch] = None,
    output_dir: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> Tuple[AcmcaNetwork, TrainLog]:
    """
    시드 고정 학습. 에폭마다 셔플하고, 평가 정확도가 가장 높을 때 체크포인트를 쓴다.

    Args:
        dataset: PreparedDataset (train/test) 또는 학습용 ModalBatch
        config: 학습 설정
        eval_batch: 평가 배치 (dataset이 PreparedDataset이면 test 분할)
        output_dir: 주어지면 best.json, final.json, train_log.csv, timing.json 기록
        progress: 에폭마다 stderr 진행 줄 출력 여부

    Returns:
        (AcmcaNetwork, TrainLog): 마지막 에폭 파라미터와 학습 기록
    """
    config = config or TrainConfig()
    if isinstance(dataset, PreparedDataset):
        train_batch, eval_batch = dataset.train, eval_batch or dataset.test
    else:
        train_batch = dataset
    if len(train_batch) == 0:
        raise UsageError("training set is empty")
    eval_batch = eval_batch if eval_batch is not None else train_batch

    model_config = config.resolved_model()
    network = AcmcaNetwork.for_batch(model_config, config.variant, train_batch, seed=config.seed)
    optimizer = build_optimizer(config.optimizer, network.parameters(), config.learning_rate)
    rng = np.random.default_rng(config.seed)
    log = TrainLog(variant=config.variant.name)
    output_dir = Path(output_dir) if output_dir else None

    logger.info(
        f"🚀 training {config.variant.name}: {len(train_batch)} samples, {network.num_parameters()} parameters, "
        f"{config.epochs} epochs, batch {config.batch_size}, {config.optimizer} lr={config.learning_rate}"
    )
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        total_loss = 0.0
        for b, mini in enumerate(iter_batches(train_batch, config.batch_size, rng), start=1):
            optimizer.zero_grad()
            try:
                loss = cross_entropy(network.forward(mini), mini.labels)
            except NumericError as e:
                raise NumericError(f"epoch {epoch}, batch {b}: {e}") from e
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"loss became {value} at epoch {epoch}, batch {b}; lower the learning rate")
            backward(loss)
            optimizer.step()
            total_loss += value * len(mini)

        record_ = EpochRecord(
            epoch=epoch,
            loss=total_loss / len(train_batch),
            train_acc=evaluate_accuracy(network, train_batch),
            eval_acc=evaluate_accuracy(network, eval_batch),
            wall_time=time.perf_counter() - started,
        )
        improved = record_.eval_acc > log.best_eval_acc
        log.append(record_)
        if progress:
            print_progress(record_.progress_line())
        if improved and output_dir:
            save_checkpoint(network, output_dir / "best.json", extra={"epoch": epoch, "eval_acc": record_.eval_acc})

    if output_dir:
        save_checkpoint(network, output_dir / "final.json", extra={"epoch": config.epochs})
        log.write(output_dir, {"seed": config.seed, "optimizer": config.optimizer})
    logger.info(f"✅ {config.variant.name}: best eval_acc {log.best_eval_acc:.4f} at epoch {log.best_epoch}")
    return network, log


# =============================================================================
# 스윕
# =============================================================================

SWEEP_AXES = ("epochs", "batch_size", "feature_dim")


@dataclass
class SweepResult:
    axis: str
    variant: str
    points: List[tuple] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.points, columns=[self.axis, "test_accuracy"])


def sweep(
    axis: str,
    values: Sequence[int],
    dataset: PreparedDataset,
    base: Optional[TrainConfig] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> SweepResult:
    """
    한 축만 바꾸고 나머지는 고정해 값마다 학습/평가 한 번씩. 모든 값을 먼저 검증한다.
    """
    if axis not in SWEEP_AXES:
        raise UsageError(f"unknown sweep axis '{axis}'; choose from {list(SWEEP_AXES)}")
    if not values:
        raise UsageError("sweep needs at least one value")
    base = base or TrainConfig()
    configs = [TrainConfig(**{**base.model_dump(), axis: int(v)}) for v in values]
    for cfg in configs:
        cfg.resolved_model()

    result = SweepResult(axis=axis, variant=base.variant.name)
    for value, cfg in zip(values, configs):
        run_dir = Path(output_dir) / f"{axis}_{value}" if output_dir else None
        _, log = train(dataset, cfg, output_dir=run_dir, progress=False)
        accuracy = log.final.eval_acc
        result.points.append((int(value), accuracy))
        logger.info(f"📈 sweep {axis}={value}: test accuracy {accuracy:.4f}")
    return result
