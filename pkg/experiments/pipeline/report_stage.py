"""
Report Stage - 비교 표, 평균 ROC 겹침 그래프, 스윕 곡선
"""
from datetime import datetime

from acmca.evaluation import compare_report, write_sweep_report
from .base_stage import BaseStage
from .state import PipelinePhase, PresetState


class ReportStage(BaseStage):
    """평가된 실행들을 프리셋 단위 결과물로 묶는 단계"""

    async def execute(self, state: PresetState) -> PresetState:
        try:
            self.safe_update_phase(state, PipelinePhase.REPORTING, "📝 비교 보고서 작성 중...")
            config = state["config"]
            output_dir = state["output_dir"]
            # 실행 순서 유지 (동시 실행 완료 순서와 무관하게 같은 CSV)
            reports = [state["reports"][run.run_id] for run in state["runs"] if run.run_id in state["reports"]]
            metadata = {
                "preset": state["preset"],
                "seed": config.seed,
                "test_subjects": reports[0].n_samples,
                "failed_runs": len(state["failures"]),
            }

            _, paths = compare_report(reports, output_dir, metadata)
            state["artifacts"].update({name: str(path) for name, path in paths.items()})

            swept = [run for run in state["runs"] if run.overrides and run.run_id in state["reports"]]
            if swept:
                axis = next(iter(swept[0].overrides))
                points = [(run.overrides[axis], state["reports"][run.run_id].metrics.overall_accuracy) for run in swept]
                sweep_paths = write_sweep_report(axis, points, output_dir, metadata, label=swept[0].variant.name)
                state["artifacts"].update({name: str(path) for name, path in sweep_paths.items()})

            state["completed_at"] = datetime.now()
            state["processing_time"] = (state["completed_at"] - state["started_at"]).total_seconds()
            self.safe_update_phase(state, PipelinePhase.COMPLETED, "✅ 프리셋 완료!")
            self.log_debug(f"Preset finished in {state['processing_time']:.2f} seconds")
            return state

        except Exception as e:
            return self.handle_error(state, e, "Report generation failed")
