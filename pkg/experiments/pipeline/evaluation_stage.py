"""
Evaluation Stage - 학습된 체크포인트를 테스트 분할로 평가
"""
import asyncio

from acmca.checkpoint import load_checkpoint
from acmca.evaluation import build_report, write_report
from acmca.errors import InternalError
from .base_stage import BaseStage
from .state import PipelinePhase, PresetState, add_failure


class EvaluationStage(BaseStage):
    """실행별 체크포인트(best 또는 final) → EvalReport"""

    def _evaluate_one(self, state: PresetState, run):
        result = state["train_results"][run.run_id]
        network = load_checkpoint(result["checkpoint"])
        test = state["dataset"].test
        report = build_report(run.run_id, network.predict_proba(test), test.labels)
        write_report(report, self.run_dir(state, run.run_id))
        return report

    async def execute(self, state: PresetState) -> PresetState:
        try:
            trained = [run for run in state["runs"] if run.run_id in state["train_results"]]
            self.safe_update_phase(state, PipelinePhase.EVALUATION, f"📊 {len(trained)}개 실행 평가 중...")

            for run in trained:
                try:
                    report = await asyncio.to_thread(self._evaluate_one, state, run)
                except Exception as e:
                    self.log_debug(f"Evaluation of {run.run_id} failed: {e}")
                    add_failure(state, run.run_id, "evaluation", e)
                    continue
                state["reports"][run.run_id] = report
                self.log_debug(
                    f"{run.run_id}: accuracy {report.metrics.overall_accuracy:.4f}, macro AUC {report.roc.macro_auc:.4f}"
                )

            if trained and not state["reports"]:
                return self.handle_error(state, InternalError("no run could be evaluated"), "Evaluation failed")
            return state

        except Exception as e:
            return self.handle_error(state, e, "Evaluation stage failed")
