"""faup: facial-expression analysis via action-unit rules and geometry.

Subpackages cover the 24-point geometric model (geometry), the AU rule
tables (aucodes), the rule engine with decision trees and pruning plans
(rules), PCA and SVM primitives (pca, svm), the image front-end (imaging),
the synthetic data generator (synth), the end-to-end pipeline (pipeline)
and the benchmark report writer (report).
"""

__version__ = "0.1.0"

from .aucodes import Emotion, AUPattern, emotion_aus, unique_patterns, absence_aus
from .geometry import FaceModel, normalize_face, cumulative_diff, displacement
from .rules import (
    AUObservation,
    classify_observation,
    absent_emotions,
    build_absence_tree,
    build_transition_tree,
    plan_monitoring,
)
from .pipeline import (
    PipelineConfig,
    TrainedBundle,
    train,
    classify_full,
    classify_pruned,
    detect_transitions,
    bench_compare,
    save_bundle,
    load_bundle,
)
from .synth import SynthConfig, generate_dataset, generate_sequence, neutral_template

__all__ = [
    "Emotion", "AUPattern", "emotion_aus", "unique_patterns", "absence_aus",
    "FaceModel", "normalize_face", "cumulative_diff", "displacement",
    "AUObservation", "classify_observation", "absent_emotions",
    "build_absence_tree", "build_transition_tree", "plan_monitoring",
    "PipelineConfig", "TrainedBundle", "train", "classify_full",
    "classify_pruned", "detect_transitions", "bench_compare",
    "save_bundle", "load_bundle",
    "SynthConfig", "generate_dataset", "generate_sequence", "neutral_template",
    "__version__",
]
