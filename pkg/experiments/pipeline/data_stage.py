"""
Data Stage - 프리셋 공용 데이터셋 준비
"""
import asyncio
import logging
from pathlib import Path
from typing import Optional, Tuple

import pandas as pd

from acmca.data.cohort import PreparedDataset, build_dataset
from acmca.data.synthetic import synth_cohort
from acmca.data.tables import parse_clinical, parse_feature_vectors, parse_genotypes, write_tables
from utils import write_csv_with_metadata
from ..presets import DataSection
from .base_stage import BaseStage
from .state import PipelinePhase, PresetState

logger = logging.getLogger(__name__)


def materialize_dataset(
    data: DataSection,
    seed: int,
    directory: Path,
) -> Tuple[PreparedDataset, Optional[pd.DataFrame]]:
    """
    설정의 데이터 소스로부터 준비된 데이터셋을 만들어 directory에 저장

    합성 데이터도 원본 파일 형식으로 한 번 기록한 뒤 파서로 다시 읽는다.

    Args:
        data: [data] 섹션
        seed: 분할 시드
        directory: 출력 디렉토리 (train.npz, test.npz, manifest.json, snp_filter_report.csv)

    Returns:
        (PreparedDataset, 사이트 보고서 또는 None)
    """
    directory = Path(directory)
    if data.source == "prepared":
        logger.info(f"📂 using prepared dataset: {data.prepared}")
        return PreparedDataset.load(data.prepared), None

    if data.source == "synthetic":
        cohort = synth_cohort(data.synthetic)
        paths = write_tables(cohort.clinical, cohort.genotypes, cohort.mri, cohort.pet, directory / "raw")
        sources = {
            "clinical": paths["clinical"],
            "genotype": paths["genotype"],
            "mri_features": paths["mri"],
            "pet_features": paths["pet"],
        }
    else:
        sources = {name: Path(getattr(data, name)) for name in ("clinical", "genotype", "mri_features", "pet_features")}

    dataset, report = build_dataset(
        parse_clinical(sources["clinical"]),
        parse_genotypes(sources["genotype"]),
        parse_feature_vectors(sources["mri_features"], "mri"),
        parse_feature_vectors(sources["pet_features"], "pet"),
        thresholds=data.thresholds,
        top_k=data.top_k,
        test_fraction=data.test_fraction,
        seed=seed,
    )
    dataset.manifest["source"] = data.source
    if data.source == "synthetic":
        dataset.manifest["synthetic"] = data.synthetic.model_dump()
    else:
        dataset.manifest["files"] = {name: str(path) for name, path in sources.items()}
    dataset.save(directory)
    kept = int(report["kept"].sum())
    write_csv_with_metadata(
        directory / "snp_filter_report.csv",
        report,
        {**data.thresholds.model_dump(), "sites": len(report), "kept": kept},
    )
    return dataset, report


class DataPreparationStage(BaseStage):
    """모든 실행이 공유할 데이터셋을 한 번만 준비하는 단계"""

    async def execute(self, state: PresetState) -> PresetState:
        try:
            self.safe_update_phase(state, PipelinePhase.DATA_PREPARATION, "📦 데이터셋 준비 중...")
            config = state["config"]
            directory = Path(state["output_dir"]) / "dataset"
            dataset, _ = await asyncio.to_thread(materialize_dataset, config.data, config.seed, directory)

            state["dataset"] = dataset
            state["dataset_dir"] = str(config.data.prepared or directory)
            counts = f"train {len(dataset.train)}, test {len(dataset.test)}"
            self.log_debug(f"Dataset ready ({counts}), widths {dataset.widths}")
            return state

        except Exception as e:
            return self.handle_error(state, e, "Data preparation failed")
