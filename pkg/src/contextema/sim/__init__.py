from .personas import Persona, default_cohort
from .runner import StudyResult, StudyRunConfig, run_study
from .synth import GroundTruthDay, generate_ground_truth, render_sensor_traces, true_context

__all__ = [
    "Persona",
    "default_cohort",
    "StudyResult",
    "StudyRunConfig",
    "run_study",
    "GroundTruthDay",
    "generate_ground_truth",
    "render_sensor_traces",
    "true_context",
]
