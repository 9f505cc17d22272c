"""
Base Stage 클래스 정의
"""
import sys
from abc import ABC, abstractmethod
from pathlib import Path

from .state import PipelinePhase, PresetState, add_error, update_phase


class BaseStage(ABC):
    """모든 프리셋 파이프라인 단계의 기본 클래스"""

    def __init__(self):
        self.stage_name = self.__class__.__name__

    @abstractmethod
    async def execute(self, state: PresetState) -> PresetState:
        """단계의 주요 실행 로직"""

    def log_debug(self, message: str):
        """디버그 로그 출력"""
        print(f"DEBUG [{self.stage_name}]: {message}", file=sys.stderr, flush=True)

    def log_progress(self, phase: str, message: str):
        """진행 상태 로그"""
        print(f"PROGRESS [{phase}]: {message}", file=sys.stderr, flush=True)

    def run_dir(self, state: PresetState, run_id: str) -> Path:
        """실행별 하위 디렉토리 (동시 실행 간 파일 충돌 방지)"""
        return Path(state["output_dir"]) / run_id

    def safe_update_phase(self, state: PresetState, new_phase: PipelinePhase, message: str = ""):
        """안전한 상태 업데이트"""
        try:
            update_phase(state, new_phase, message)
            self.log_progress(new_phase.value, message)
        except Exception as e:
            self.log_debug(f"Phase update failed: {e}")
            add_error(state, f"Phase update failed: {e}")

    def handle_error(self, state: PresetState, error: Exception, context: str = ""):
        """에러 처리"""
        error_msg = f"{context}: {error}" if context else str(error)
        self.log_debug(f"Error in {self.stage_name}: {error_msg}")
        add_error(state, error_msg)
        if state.get("fatal") is None:
            state["fatal"] = error
        return state
