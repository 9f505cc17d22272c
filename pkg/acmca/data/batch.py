"""
ModalBatch - 피험자별로 정렬된 네 모달리티 특징과 라벨
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence

import numpy as np

from ..errors import ShapeError
from ..variants import Modality

CLASS_NAMES = ("CN", "MCI", "AD")
CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}


@dataclass
class ModalBatch:
    """모든 피험자가 네 모달리티를 모두 가진 배치 (중첩 코호트)"""
    subject_ids: List[str]
    clinical: np.ndarray
    genetic: np.ndarray
    mri: np.ndarray
    pet: np.ndarray
    labels: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.clinical = np.asarray(self.clinical, dtype=np.float64)
        self.genetic = np.asarray(self.genetic, dtype=np.float64)
        self.mri = np.asarray(self.mri, dtype=np.float64)
        self.pet = np.asarray(self.pet, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.subject_ids)
        for name in ("clinical", "genetic", "mri", "pet", "labels"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ShapeError(f"ModalBatch.{name} has {arr.shape[0]} rows, expected {n}")

    def __len__(self) -> int:
        return len(self.subject_ids)

    def features(self, modality: Modality) -> np.ndarray:
        return {
            Modality.CLINICAL: self.clinical,
            Modality.GENETIC: self.genetic,
            Modality.MRI: self.mri,
            Modality.PET: self.pet,
        }[Modality(modality)]

    def widths(self) -> Dict[str, int]:
        return {m.value: int(self.features(m).shape[1]) for m in Modality}

    def subset(self, indices: Sequence[int]) -> "ModalBatch":
        idx = np.asarray(indices, dtype=np.int64)
        return ModalBatch(
            subject_ids=[self.subject_ids[i] for i in idx],
            clinical=self.clinical[idx],
            genetic=self.genetic[idx],
            mri=self.mri[idx],
            pet=self.pet[idx],
            labels=self.labels[idx],
            metadata=dict(self.metadata),
        )

    def class_counts(self, num_classes: int = len(CLASS_NAMES)) -> List[int]:
        return np.bincount(self.labels, minlength=num_classes).tolist()


def iter_batches(batch: ModalBatch, batch_size: int, rng: np.random.Generator = None) -> Iterator[ModalBatch]:
    """rng가 있으면 섞어서 batch_size 단위로 나눈다"""
    order = np.arange(len(batch)) if rng is None else rng.permutation(len(batch))
    for start in range(0, len(batch), batch_size):
        yield batch.subset(order[start:start + batch_size])
