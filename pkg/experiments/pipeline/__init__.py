"""
Preset Pipeline Package
"""
from .state import PresetState, PipelinePhase, create_initial_state
from .base_stage import BaseStage
from .data_stage import DataPreparationStage, materialize_dataset
from .training_stage import TrainingStage
from .evaluation_stage import EvaluationStage
from .report_stage import ReportStage
from .workflow import PresetWorkflow, create_preset_workflow

__all__ = [
    'PresetState',
    'PipelinePhase',
    'create_initial_state',
    'BaseStage',
    'DataPreparationStage',
    'materialize_dataset',
    'TrainingStage',
    'EvaluationStage',
    'ReportStage',
    'PresetWorkflow',
    'create_preset_workflow'
]
