"""
ACMCA Desk 명령행 진입점

    python main.py prepare --synthetic --n-per-class 60 --seed 7
    python main.py train --dataset runs/dataset --variant acmca --epochs 50
    python main.py eval --checkpoint runs/train/acmca/best.json --dataset runs/dataset
    python main.py preset ablation-suite --epochs 30
    python main.py sweep --axis epochs --values 10,50,125

종료 코드: 0 성공, 2 사용법/설정 오류, 3 데이터 오류, 4 수치 오류
"""
import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from config import Config
from acmca.checkpoint import load_checkpoint
from acmca.data.cohort import PreparedDataset
from acmca.errors import AcmcaError, ConfigurationError, InternalError, UsageError
from acmca.evaluation import build_report, write_report
from acmca.training import SWEEP_AXES, train
from experiments.pipeline import create_preset_workflow, materialize_dataset
from experiments.presets import (
    SOURCE_FLAGS,
    ExperimentConfig,
    PresetName,
    load_experiment_config,
    preset_runs,
    sweep_runs,
)
from utils import resolve_output_dir, setup_logging, write_json

logger = logging.getLogger("acmca")


# =============================================================================
# 인자 파서
# =============================================================================

def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("at least one value is required")
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML 설정 파일 ([data] [train] [model] [[variants]] [output])")
    parser.add_argument("--output", help=f"출력 디렉토리 (기본: $ACMCA_OUTPUT_ROOT 또는 '{Config.OUTPUT_ROOT}' 아래)")
    parser.add_argument("--seed", type=int, help=f"분할/초기화 시드 (기본 {Config.SEED})")


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("data source")
    group.add_argument("--synthetic", action="store_true", help="합성 코호트 사용")
    group.add_argument("--n-per-class", type=int, help="합성: 클래스당 피험자 수")
    group.add_argument("--snp-count", type=int, help="합성: SNP 사이트 수")
    group.add_argument("--img-width", type=int, help="합성: MRI/PET 특징 폭")
    group.add_argument("--separation", type=float, help="합성: 클래스 분리도 (0이면 신호 없음)")
    group.add_argument("--signal-layout", choices=["all", "split"], help="합성: 클래스 신호 배치")
    group.add_argument("--clinical", help="임상 CSV")
    group.add_argument("--genotype", help="유전형 TSV")
    group.add_argument("--mri-features", help="MRI 특징 CSV")
    group.add_argument("--pet-features", help="PET 특징 CSV")
    group.add_argument("--dataset", help="이미 준비된 데이터셋 디렉토리")
    group.add_argument("--top-k", type=int, help="분산 상위 k개 SNP만 사용")
    group.add_argument("--test-fraction", type=float, help=f"테스트 비율 (기본 {Config.TEST_FRACTION})")
    group.add_argument("--hwe-p", type=float, help=f"HWE p 임계값 (기본 {Config.HWE_P_THRESHOLD})")
    group.add_argument("--min-gq", type=int, help=f"최소 GQ (기본 {Config.MIN_GQ})")
    group.add_argument("--min-maf", type=float, help=f"최소 MAF (기본 {Config.MIN_MAF})")
    group.add_argument("--max-missing", type=float, help=f"최대 결측률 (기본 {Config.MAX_MISSING_RATE})")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--variant", action="append", help="변형 이름 (acmca, acmca-wcm, maddi, clinical+mri, ...)")
    group.add_argument("--epochs", type=int, help=f"에폭 수 (기본 {Config.EPOCHS})")
    group.add_argument("--batch-size", type=int, help=f"배치 크기 (기본 {Config.BATCH_SIZE})")
    group.add_argument("--learning-rate", type=float, help=f"학습률 (기본 {Config.LEARNING_RATE})")
    group.add_argument("--feature-dim", type=int, help=f"특징 차원 d (기본 {Config.FEATURE_DIM}, 제곱수)")
    group.add_argument("--optimizer", choices=["adam", "sgd"], help=f"옵티마이저 (기본 {Config.OPTIMIZER})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acmca",
        description="ACMCA multimodal classifier: data preparation, training, evaluation, experiment presets",
    )
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="로그 레벨 (DEBUG, INFO, WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    prepare = sub.add_parser("prepare", help="원본/합성 데이터 → 필터, 인코딩, 교집합, 분할된 데이터셋")
    _add_common(prepare)
    _add_data_flags(prepare)
    prepare.set_defaults(handler=cmd_prepare)

    train_p = sub.add_parser("train", help="준비된 데이터셋으로 학습 (체크포인트 + 학습 기록)")
    _add_common(train_p)
    train_p.add_argument("--dataset", help="준비된 데이터셋 디렉토리 (prepare 출력)")
    _add_train_flags(train_p)
    train_p.set_defaults(handler=cmd_train)

    eval_p = sub.add_parser("eval", help="체크포인트를 테스트 분할로 평가 (지표 CSV + ROC SVG)")
    eval_p.add_argument("--checkpoint", required=True, help="체크포인트 JSON")
    eval_p.add_argument("--dataset", required=True, help="준비된 데이터셋 디렉토리")
    eval_p.add_argument("--output", help="출력 디렉토리")
    eval_p.set_defaults(handler=cmd_eval)

    preset = sub.add_parser("preset", help="실험 프리셋 실행 (비교 표 + ROC 겹침 + 스윕 곡선)")
    preset.add_argument("name", choices=[p.value for p in PresetName], help="프리셋 이름")
    preset.add_argument("--values", type=_int_list, help="스윕 프리셋 축 값 (예: 10,50,125)")
    preset.add_argument("--concurrency", type=int, help=f"동시 실행 수 (기본 {Config.MAX_CONCURRENT_RUNS})")
    _add_common(preset)
    _add_data_flags(preset)
    _add_train_flags(preset)
    preset.set_defaults(handler=cmd_preset)

    sweep = sub.add_parser("sweep", help="하이퍼파라미터 한 축 스윕")
    sweep.add_argument("--axis", required=True, choices=list(SWEEP_AXES), help="스윕 축")
    sweep.add_argument("--values", required=True, type=_int_list, help="축 값 (예: 10,50,125)")
    sweep.add_argument("--concurrency", type=int, help=f"동시 실행 수 (기본 {Config.MAX_CONCURRENT_RUNS})")
    _add_common(sweep)
    _add_data_flags(sweep)
    _add_train_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    return parser


# =============================================================================
# 설정 해석
# =============================================================================

def _get(args: argparse.Namespace, name: str) -> Any:
    return getattr(args, name, None)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """설정 파일 + CLI 플래그 (플래그가 우선)"""
    config = load_experiment_config(_get(args, "config"))
    paths = {name: _get(args, name) for name in SOURCE_FLAGS}
    if _get(args, "synthetic") and any(paths.values()):
        raise UsageError("--synthetic cannot be combined with " + ", ".join(f for n, f in SOURCE_FLAGS.items() if paths[n]))

    overrides: Dict[str, Any] = {
        "seed": _get(args, "seed"),
        "data": {
            **paths,
            "prepared": _get(args, "dataset"),
            "top_k": _get(args, "top_k"),
            "test_fraction": _get(args, "test_fraction"),
            "synthetic": {
                "seed": _get(args, "seed"),
                "n_per_class": _get(args, "n_per_class"),
                "snp_count": _get(args, "snp_count"),
                "img_width": _get(args, "img_width"),
                "class_separation": _get(args, "separation"),
                "signal_layout": _get(args, "signal_layout"),
            },
            "thresholds": {
                "hwe_p": _get(args, "hwe_p"),
                "min_gq": _get(args, "min_gq"),
                "min_maf": _get(args, "min_maf"),
                "max_missing": _get(args, "max_missing"),
            },
        },
        "train": {
            "epochs": _get(args, "epochs"),
            "batch_size": _get(args, "batch_size"),
            "learning_rate": _get(args, "learning_rate"),
            "feature_dim": _get(args, "feature_dim"),
            "optimizer": _get(args, "optimizer"),
        },
        "output": {"directory": _get(args, "output")},
        "variants": _get(args, "variant"),
    }
    if _get(args, "synthetic"):
        # 설정 파일의 원본 경로 대신 합성 데이터
        overrides["data"].update({name: "" for name in SOURCE_FLAGS})
    return config.with_overrides(overrides)


def _output_dir(config: ExperimentConfig, *default_parts: str) -> Path:
    if config.output.directory:
        return resolve_output_dir(config.output.directory)
    return resolve_output_dir(None, *default_parts)


def _load_dataset(config: ExperimentConfig) -> PreparedDataset:
    if not config.data.prepared:
        raise UsageError("no prepared dataset given; pass --dataset (create one with 'prepare')")
    return PreparedDataset.load(config.data.prepared)


# =============================================================================
# 하위 명령
# =============================================================================

def cmd_prepare(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if config.data.source == "prepared":
        raise UsageError("prepare builds a dataset; --dataset is only for train/preset/sweep")
    if not args.synthetic and config.data.source == "synthetic" and not args.config:
        raise UsageError("prepare needs --synthetic or all of " + ", ".join(SOURCE_FLAGS.values()))

    out = _output_dir(config, "dataset")
    write_json(out / "resolved_config.json", config.model_dump(mode="json"))
    dataset, report = materialize_dataset(config.data, config.seed, out)
    counts = dataset.train.class_counts()
    print(f"✅ prepared dataset: {out}")
    print(f"   subjects: {len(dataset.train) + len(dataset.test)} (train {len(dataset.train)}, test {len(dataset.test)})")
    print(f"   train per class: {counts}, widths: {dataset.widths}")
    if report is not None:
        print(f"   SNP sites kept: {int(report['kept'].sum())}/{len(report)}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    dataset = _load_dataset(config)
    for variant in config.variants:
        train_config = config.train_config(variant)
        if config.output.directory and len(config.variants) > 1:
            out = resolve_output_dir(config.output.directory, variant.name)
        else:
            out = _output_dir(config, "train", variant.name)
        write_json(out / "resolved_config.json", {
            "dataset": config.data.prepared,
            "train": train_config.model_dump(mode="json"),
        })
        _, log = train(dataset, train_config, output_dir=out)
        print(f"✅ {variant.name}: final eval_acc {log.final.eval_acc:.4f}, "
              f"best {log.best_eval_acc:.4f} at epoch {log.best_epoch} → {out}")
    return 0


def check_compatibility(network, dataset: PreparedDataset) -> None:
    """체크포인트 입력 폭과 데이터셋 폭 비교"""
    expected = {m.value: w for m, w in network.input_widths.items()}
    actual = {m: dataset.widths[m] for m in expected}
    if expected != actual:
        raise ConfigurationError(f"checkpoint expects input widths {expected}, dataset has {actual}")


def cmd_eval(args: argparse.Namespace) -> int:
    network = load_checkpoint(args.checkpoint)
    dataset = PreparedDataset.load(args.dataset)
    check_compatibility(network, dataset)
    out = resolve_output_dir(args.output) if args.output else resolve_output_dir(None, "eval", network.variant.name)

    test = dataset.test
    report = build_report(network.variant.name, network.predict_proba(test), test.labels)
    paths = write_report(report, out)
    row = report.summary_row()
    print(f"✅ {network.variant.name}: " + " ".join(f"{k}={v:.4f}" for k, v in row.items()))
    print(f"   {paths['metrics']}\n   {paths['roc']}")
    return 0


def _run_pipeline(label: str, config: ExperimentConfig, runs, out: Path, concurrency: Optional[int]) -> int:
    workflow = create_preset_workflow(concurrency or Config.MAX_CONCURRENT_RUNS)
    state = asyncio.run(workflow.run_preset(label, config, runs, out))

    for name, path in sorted(state["artifacts"].items()):
        print(f"   {name}: {path}")
    fatal = state.get("fatal")
    if fatal is not None:
        if isinstance(fatal, AcmcaError):
            raise fatal
        raise InternalError(f"{type(fatal).__name__}: {fatal}") from fatal
    if state["failures"]:
        print(f"⚠️ {label}: {len(state['failures'])} run(s) failed; partial results kept", file=sys.stderr)
        return max(f["exit_code"] for f in state["failures"])
    print(f"✅ {label}: {len(state['reports'])} runs → {out}")
    return 0


def cmd_preset(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    runs = preset_runs(args.name, config, args.values)
    out = _output_dir(config, "presets", args.name)
    return _run_pipeline(args.name, config, runs, out, args.concurrency)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    runs = sweep_runs(args.axis, args.values, config.variants[0])
    for run in runs:
        run.train_config(config).resolved_model()
    out = _output_dir(config, "sweeps", args.axis)
    return _run_pipeline(f"sweep-{args.axis}", config, runs, out, args.concurrency)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except AcmcaError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return ConfigurationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
