"""
Training Stage - 프리셋의 실행들을 동시에 학습
"""
import asyncio
from typing import Any, Dict

from config import Config
from acmca.training import train
from utils import write_json
from .base_stage import BaseStage
from .state import PipelinePhase, PresetState, add_failure


class TrainingStage(BaseStage):
    """
    실행마다 독립된 그래프/시드로 학습한다.
    동시 실행 수는 세마포어로 제한하고, 파일은 실행별 하위 디렉토리에만 쓴다.
    """

    def __init__(self, max_concurrent: int = Config.MAX_CONCURRENT_RUNS):
        super().__init__()
        self.max_concurrent = max(1, max_concurrent)

    def _train_one(self, state: PresetState, run) -> Dict[str, Any]:
        config = state["config"]
        run_dir = self.run_dir(state, run.run_id)
        train_config = run.train_config(config)
        write_json(run_dir / "resolved_config.json", {
            "run_id": run.run_id,
            "dataset": state["dataset_dir"],
            "train": train_config.model_dump(mode="json"),
        })
        _, log = train(state["dataset"], train_config, output_dir=run_dir, progress=False)
        return {
            "run_dir": str(run_dir),
            "epochs": len(log.records),
            "best_epoch": log.best_epoch,
            "best_eval_acc": log.best_eval_acc,
            "final_eval_acc": log.final.eval_acc,
            "checkpoint": str(run_dir / f"{run.checkpoint}.json"),
        }

    async def execute(self, state: PresetState) -> PresetState:
        try:
            runs = state["runs"]
            self.safe_update_phase(
                state, PipelinePhase.TRAINING,
                f"🏋️ {len(runs)}개 실행 학습 중 (동시 {self.max_concurrent})...",
            )
            semaphore = asyncio.Semaphore(self.max_concurrent)

            async def train_with_semaphore(run):
                async with semaphore:
                    self.log_debug(f"Training {run.run_id}")
                    return await asyncio.to_thread(self._train_one, state, run)

            results = await asyncio.gather(*(train_with_semaphore(run) for run in runs), return_exceptions=True)

            # 실행 순서대로 반영 (완료 순서와 무관)
            for run, result in zip(runs, results):
                if isinstance(result, BaseException):
                    self.log_debug(f"Run {run.run_id} failed: {result}")
                    add_failure(state, run.run_id, "training", result)
                else:
                    state["train_results"][run.run_id] = result
                    self.log_progress(
                        PipelinePhase.TRAINING.value,
                        f"✅ {run.run_id}: final eval_acc {result['final_eval_acc']:.4f}",
                    )

            if not state["train_results"]:
                first = next(r for r in results if isinstance(r, BaseException))
                return self.handle_error(state, first, "All runs failed during training")
            return state

        except Exception as e:
            return self.handle_error(state, e, "Training stage failed")
