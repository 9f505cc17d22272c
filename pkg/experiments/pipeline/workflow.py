"""
LangGraph 기반 프리셋 실행 워크플로우

prepare → train → evaluate → report, 단계마다 progress.json 갱신.
실패한 실행은 failures.json에 남기고 나머지 결과는 보존한다.
"""
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from langgraph.graph import END, START, StateGraph

from config import Config
from utils import write_json
from .data_stage import DataPreparationStage
from .evaluation_stage import EvaluationStage
from .report_stage import ReportStage
from .state import PipelinePhase, PresetState, create_initial_state
from .training_stage import TrainingStage

logger = logging.getLogger(__name__)

# 단계별 사용자 표시 정보
PHASE_INFO: Dict[PipelinePhase, Dict[str, Any]] = {
    PipelinePhase.DATA_PREPARATION: {"step": 1, "total": 4, "name": "데이터 준비", "percent": 10},
    PipelinePhase.TRAINING: {"step": 2, "total": 4, "name": "학습", "percent": 30},
    PipelinePhase.EVALUATION: {"step": 3, "total": 4, "name": "평가", "percent": 80},
    PipelinePhase.REPORTING: {"step": 4, "total": 4, "name": "보고서", "percent": 95},
    PipelinePhase.COMPLETED: {"step": 4, "total": 4, "name": "완료", "percent": 100},
}


class PresetWorkflow:
    """LangGraph 기반 프리셋 실행 워크플로우"""

    def __init__(self, max_concurrent: int = Config.MAX_CONCURRENT_RUNS):
        self.max_concurrent = max_concurrent
        self.workflow = self._build_workflow()

    def _save_progress(self, state: PresetState, phase: PipelinePhase, step_name: str, message: str = ""):
        """진행 상황을 출력 디렉토리의 progress.json에 저장"""
        try:
            info = PHASE_INFO.get(phase, {"step": 0, "total": 4, "name": step_name, "percent": 0})
            write_json(Path(state["output_dir"]) / "progress.json", {
                "preset": state["preset"],
                "current_phase": phase.value,
                "step_name": step_name,
                "message": message,
                "progress_percent": info["percent"] if phase != PipelinePhase.ERROR else 0,
                "phase_info": {k: v for k, v in info.items() if k != "percent"},
                "runs": len(state["runs"]),
                "trained": len(state["train_results"]),
                "evaluated": len(state["reports"]),
                "failed": len(state["failures"]),
                "updated_at": datetime.now().isoformat(),
            })
        except Exception as e:
            logger.error(f"❌ failed to save progress: {e}")

    def _wrap_stage_execution(self, stage_func, phase: PipelinePhase, step_name: str):
        """단계 실행을 래핑하여 진행 상황 추적"""
        async def wrapped_execution(state: PresetState):
            self._save_progress(state, phase, step_name, f"{step_name} 시작")
            try:
                result = await stage_func(state)
            except Exception as e:
                print(f"ERROR: Stage {step_name} failed: {e}", file=sys.stderr, flush=True)
                self._save_progress(state, PipelinePhase.ERROR, step_name, f"{step_name} 오류: {e}")
                raise
            if result.get("fatal") is not None:
                self._save_progress(result, PipelinePhase.ERROR, step_name, f"{step_name} 오류: {result['fatal']}")
            elif result.get("current_phase") == PipelinePhase.COMPLETED:
                self._save_progress(result, PipelinePhase.COMPLETED, step_name, "프리셋 완료")
            else:
                self._save_progress(result, phase, step_name, f"{step_name} 완료")
            return result

        return wrapped_execution

    def _build_workflow(self):
        """워크플로우 구성"""
        stages = {
            "data_preparation": DataPreparationStage(),
            "training": TrainingStage(self.max_concurrent),
            "evaluation": EvaluationStage(),
            "reporting": ReportStage(),
        }

        workflow = StateGraph(PresetState)

        workflow.add_node("data_preparation",
                          self._wrap_stage_execution(stages["data_preparation"].execute,
                                                     PipelinePhase.DATA_PREPARATION, "데이터 준비"))
        workflow.add_node("training",
                          self._wrap_stage_execution(stages["training"].execute,
                                                     PipelinePhase.TRAINING, "학습"))
        workflow.add_node("evaluation",
                          self._wrap_stage_execution(stages["evaluation"].execute,
                                                     PipelinePhase.EVALUATION, "평가"))
        workflow.add_node("reporting",
                          self._wrap_stage_execution(stages["reporting"].execute,
                                                     PipelinePhase.REPORTING, "보고서"))
        workflow.add_node("error_handler", self._handle_error)

        workflow.add_edge(START, "data_preparation")
        workflow.add_conditional_edges("data_preparation", self._route,
                                       {"next": "training", "error": "error_handler"})
        workflow.add_conditional_edges("training", self._route,
                                       {"next": "evaluation", "error": "error_handler"})
        workflow.add_conditional_edges("evaluation", self._route,
                                       {"next": "reporting", "error": "error_handler"})
        workflow.add_edge("reporting", END)

        # 평가된 실행이 남아 있으면 부분 결과로 보고서까지 진행
        workflow.add_conditional_edges(
            "error_handler",
            self._should_continue_after_error,
            {"continue": "reporting", "stop": END},
        )

        return workflow.compile()

    @staticmethod
    def _route(state: PresetState) -> str:
        return "error" if state.get("fatal") is not None else "next"

    def _handle_error(self, state: PresetState) -> PresetState:
        """에러 처리 노드"""
        print(f"ERROR: Preset {state['preset']} failed with errors: {state['errors']}", file=sys.stderr, flush=True)
        return state

    def _should_continue_after_error(self, state: PresetState) -> str:
        """에러 후 계속 진행 여부 결정"""
        if state.get("reports"):
            return "continue"
        return "stop"

    def _write_failures(self, state: PresetState) -> Optional[Path]:
        """실패 목록을 failures.json으로. 실패가 없으면 이전 파일을 지운다"""
        path = Path(state["output_dir"]) / "failures.json"
        if not state["failures"] and state.get("fatal") is None:
            path.unlink(missing_ok=True)
            return None
        fatal = state.get("fatal")
        return write_json(path, {
            "preset": state["preset"],
            "failures": state["failures"],
            "errors": state["errors"],
            "fatal": None if fatal is None else {
                "error_type": type(fatal).__name__,
                "exit_code": getattr(fatal, "exit_code", 1),
                "message": str(fatal),
            },
        })

    async def run_preset(self, preset: str, config, runs: List, output_dir: Path) -> PresetState:
        """
        프리셋 실행

        Args:
            preset: 프리셋 이름
            config: ExperimentConfig
            runs: RunSpec 목록
            output_dir: 프리셋 출력 디렉토리 (실행별 하위 디렉토리 포함)

        Returns:
            PresetState: 최종 상태 (reports, failures, artifacts)
        """
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        initial_state = create_initial_state(preset, config, runs, str(output_dir))
        write_json(output_dir / "resolved_config.json", {
            "preset": preset,
            "config": config.model_dump(mode="json"),
            "runs": [run.model_dump(mode="json") for run in runs],
        })

        logger.info(f"🧭 preset {preset}: {len(runs)} runs → {output_dir}")
        final_state = await self.workflow.ainvoke(initial_state)

        failures_path = self._write_failures(final_state)
        if failures_path:
            final_state["artifacts"]["failures"] = str(failures_path)
            logger.warning(f"⚠️ preset {preset}: {len(final_state['failures'])} failed run(s), see {failures_path}")
        return final_state


def create_preset_workflow(max_concurrent: int = Config.MAX_CONCURRENT_RUNS) -> PresetWorkflow:
    """프리셋 워크플로우 팩토리 함수"""
    return PresetWorkflow(max_concurrent)
