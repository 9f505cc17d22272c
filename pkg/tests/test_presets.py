"""
Experiment Config / Preset Tests
================================

TOML 설정 검증, 프리셋 실행 목록, LangGraph 프리셋 파이프라인.
"""
import json

import pytest

from acmca.errors import ConfigurationError, UsageError
from experiments.presets import (
    ExperimentConfig, PresetName, load_experiment_config, parse_preset, preset_runs, sweep_runs,
)
from acmca.variants import VariantSpec
from main import main
from utils import read_csv_with_metadata


@pytest.fixture
def write_toml(tmp_path):
    def _write(text: str):
        path = tmp_path / "experiment.toml"
        path.write_text(text)
        return path
    return _write


# =============================================================================
# 설정 파일
# =============================================================================

class TestExperimentConfig:

    def test_defaults(self):
        config = load_experiment_config()
        assert config.train.epochs == 125
        assert config.train.feature_dim == 100
        assert [v.name for v in config.variants] == ["acmca"]
        assert config.data.source == "synthetic"

    def test_toml_sections(self, write_toml):
        config = load_experiment_config(write_toml(
            'seed = 3\n'
            'variants = ["acmca-wt", "maddi"]\n'
            '[train]\nepochs = 4\nfeature_dim = 36\n'
            '[data.synthetic]\nn_per_class = 12\n'
        ))
        assert config.seed == 3
        assert [v.name for v in config.variants] == ["acmca-wt", "maddi"]
        assert config.data.synthetic.n_per_class == 12
        assert config.train_config().feature_dim == 36

    def test_unknown_key_rejected(self, write_toml):
        with pytest.raises(ConfigurationError, match="learning_rte"):
            load_experiment_config(write_toml("[train]\nlearning_rte = 0.1\n"))

    def test_invalid_toml(self, write_toml):
        with pytest.raises(ConfigurationError):
            load_experiment_config(write_toml("[train\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_experiment_config(tmp_path / "absent.toml")

    def test_partial_file_sources(self, write_toml):
        """원본 파일은 네 개 모두 있어야 한다"""
        with pytest.raises(UsageError, match="--genotype"):
            load_experiment_config(write_toml('[data]\nclinical = "c.csv"\n'))

    def test_overrides_skip_none(self):
        config = ExperimentConfig().with_overrides({"train": {"epochs": 7, "batch_size": None}})
        assert config.train.epochs == 7
        assert config.train.batch_size == 32

    def test_explicit_variant_table(self, write_toml):
        config = load_experiment_config(write_toml(
            '[[variants]]\nname = "custom"\nmodalities = "CM"\nfusion = "symmetric"\n'
        ))
        assert config.variants[0].mask == "CM"


# =============================================================================
# 프리셋 실행 목록
# =============================================================================

class TestPresetRuns:

    @pytest.mark.parametrize("preset, count", [
        ("modality-matrix", 7), ("variant-comparison", 6), ("ablation-suite", 5),
    ])
    def test_run_counts(self, preset, count):
        runs = preset_runs(preset, ExperimentConfig())
        assert len(runs) == count
        assert len({r.run_id for r in runs}) == count
        assert all(r.checkpoint == "best" for r in runs)

    def test_modality_matrix_masks(self):
        masks = [r.variant.mask for r in preset_runs("modality-matrix", ExperimentConfig())]
        assert masks == ["C", "G", "M", "P", "CM", "GP", "CGMP"]

    def test_sweep_defaults(self):
        runs = preset_runs(PresetName.SWEEP_EPOCHS, ExperimentConfig())
        assert [r.overrides["epochs"] for r in runs] == [25, 50, 75, 100, 125, 150]
        assert all(r.checkpoint == "final" for r in runs)

    def test_sweep_dim_rejects_non_square(self):
        with pytest.raises(ConfigurationError, match="90"):
            preset_runs("sweep-dim", ExperimentConfig(), [64, 90])

    def test_values_only_for_sweeps(self):
        with pytest.raises(UsageError):
            preset_runs("ablation-suite", ExperimentConfig(), [1, 2])

    def test_unknown_preset(self):
        with pytest.raises(UsageError):
            parse_preset("everything")

    def test_sweep_run_ids(self):
        runs = sweep_runs("batch_size", [8, 16], VariantSpec.named("acmca"))
        assert [r.run_id for r in runs] == ["batch_size_8", "batch_size_16"]
        assert runs[1].train_config(ExperimentConfig()).batch_size == 16


# =============================================================================
# 파이프라인 실행
# =============================================================================

SMALL_DATA = ["--synthetic", "--n-per-class", "8", "--snp-count", "20", "--img-width", "6", "--seed", "5"]
SMALL_TRAIN = ["--epochs", "1", "--feature-dim", "4", "--batch-size", "16"]


@pytest.mark.slow
class TestPresetPipeline:

    def test_ablation_suite(self, tmp_path):
        out = tmp_path / "ablation"
        code = main(["preset", "ablation-suite", *SMALL_DATA, *SMALL_TRAIN, "--output", str(out)])
        assert code == 0
        metadata, frame = read_csv_with_metadata(out / "comparison.csv")
        assert frame["variant"].tolist() == ["acmca-wcm", "acmca-wde", "acmca-wfnet", "acmca-wt", "acmca"]
        assert metadata["preset"] == "ablation-suite"
        assert (out / "roc_comparison.svg").exists()
        assert (out / "acmca-wt" / "metrics_acmca-wt.csv").exists()
        progress = json.loads((out / "progress.json").read_text())
        assert progress["current_phase"] == "completed"
        assert progress["evaluated"] == 5
        assert not (out / "failures.json").exists()

    def test_reruns_are_byte_identical(self, tmp_path):
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert main(["preset", "ablation-suite", *SMALL_DATA, *SMALL_TRAIN, "--output", str(out)]) == 0
            outputs.append(out)
        for relative in ("comparison.csv", "acmca/train_log.csv", "acmca/metrics_acmca.csv"):
            assert (outputs[0] / relative).read_bytes() == (outputs[1] / relative).read_bytes()

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--axis", "epochs", "--values", "1,2", *SMALL_DATA,
                     "--feature-dim", "4", "--batch-size", "16", "--output", str(out)])
        assert code == 0
        _, frame = read_csv_with_metadata(out / "sweep_epochs.csv")
        assert frame["epochs"].tolist() == [1, 2]
        assert (out / "epochs_2" / "final.json").exists()
        assert (out / "sweep_epochs.svg").exists()

    def test_sweep_dim_validated_before_training(self, tmp_path):
        out = tmp_path / "dim"
        code = main(["preset", "sweep-dim", "--values", "16,90", *SMALL_DATA, "--output", str(out)])
        assert code == 2
        assert not (out / "feature_dim_16").exists()


TREND_DATA = ["--synthetic", "--signal-layout", "split", "--n-per-class", "40", "--snp-count", "60", "--img-width", "16"]
TREND_TRAIN = ["--epochs", "40", "--feature-dim", "36", "--batch-size", "16", "--learning-rate", "0.003"]


def preset_accuracy(tmp_path, preset, seed):
    """프리셋을 돌리고 변형 → 전체 정확도"""
    out = tmp_path / f"{preset}_{seed}"
    code = main(["preset", preset, *TREND_DATA, "--seed", str(seed), *TREND_TRAIN, "--output", str(out)])
    assert code == 0
    _, frame = read_csv_with_metadata(out / "comparison.csv")
    return dict(zip(frame["variant"], frame["Accuracy"].astype(float)))


@pytest.mark.slow
class TestModalityTrend:
    """CN 신호는 C/M, AD 신호는 G/P에만 있는 코호트: 네 모달리티 결합이 유리해야 한다"""

    SEEDS = (1, 2, 3)

    def test_all_modalities_beat_each_single_modality(self, tmp_path):
        violations = 0
        for seed in self.SEEDS:
            acc = preset_accuracy(tmp_path, "modality-matrix", seed)
            if any(acc["acmca"] < acc[single] for single in ("clinical", "genetic", "mri", "pet")):
                violations += 1
        assert violations <= 1

    def test_cross_modal_fusion_not_worse_than_without(self, tmp_path):
        violations = 0
        for seed in self.SEEDS:
            acc = preset_accuracy(tmp_path, "ablation-suite", seed)
            if acc["acmca"] < acc["acmca-wcm"]:
                violations += 1
        assert violations <= 1
