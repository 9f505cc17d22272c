"""
LangGraph 프리셋 파이프라인의 상태 정의
"""
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, TypedDict


class PipelinePhase(str, Enum):
    """처리 단계 정의"""
    DATA_PREPARATION = "data_preparation"
    TRAINING = "training"
    EVALUATION = "evaluation"
    REPORTING = "reporting"
    COMPLETED = "completed"
    ERROR = "error"


class PresetState(TypedDict):
    """프리셋 실행 전체 상태"""
    # 입력 정보
    preset: str
    config: Any  # ExperimentConfig
    runs: List[Any]  # RunSpec
    output_dir: str

    # 데이터
    dataset: Optional[Any]  # PreparedDataset
    dataset_dir: Optional[str]

    # 실행 결과 (run_id 기준)
    train_results: Dict[str, Dict[str, Any]]
    reports: Dict[str, Any]  # EvalReport
    failures: List[Dict[str, Any]]
    artifacts: Dict[str, str]

    # 처리 상태
    current_phase: PipelinePhase
    phase_history: List[Dict[str, Any]]
    errors: List[str]
    fatal: Optional[BaseException]  # 프리셋 전체를 멈춘 첫 오류

    # 메타데이터
    started_at: datetime
    completed_at: Optional[datetime]
    processing_time: Optional[float]


def create_initial_state(preset: str, config: Any, runs: List[Any], output_dir: str) -> PresetState:
    """초기 상태 생성"""
    return PresetState(
        preset=preset,
        config=config,
        runs=list(runs),
        output_dir=str(output_dir),

        dataset=None,
        dataset_dir=None,

        train_results={},
        reports={},
        failures=[],
        artifacts={},

        current_phase=PipelinePhase.DATA_PREPARATION,
        phase_history=[],
        errors=[],
        fatal=None,

        started_at=datetime.now(),
        completed_at=None,
        processing_time=None,
    )


def update_phase(state: PresetState, new_phase: PipelinePhase, message: str = "") -> None:
    """상태의 처리 단계 업데이트"""
    state["phase_history"].append({
        "phase": state["current_phase"],
        "completed_at": datetime.now(),
        "message": message,
    })
    state["current_phase"] = new_phase


def add_error(state: PresetState, error: str) -> None:
    """에러 추가"""
    state["errors"].append(f"[{datetime.now().isoformat()}] {error}")
    state["current_phase"] = PipelinePhase.ERROR


def add_failure(state: PresetState, run_id: str, stage: str, error: BaseException) -> None:
    """실행 단위 실패 기록. 다른 실행은 계속된다"""
    state["failures"].append({
        "run_id": run_id,
        "stage": stage,
        "error_type": type(error).__name__,
        "exit_code": getattr(error, "exit_code", 1),
        "message": str(error),
    })
