"""Training loop, metrics, baselines, recognizer and ablation harness."""

from .ablation import (
    GENERATOR_VARIANTS,
    LOSS_VARIANTS,
    AblationReport,
    AblationRow,
    generator_variants,
    loss_variants,
    run_ablation,
)
from .config import LOSS_SUBSETS, PRESETS, TrainConfig, canonical_json, config_hash
from .metrics import (
    AFDReport,
    MeanPosePredictor,
    NearestNeighbour,
    afd,
    afd_report,
    map_ordered,
    nn_baseline,
    synthesize_clips,
)
from .recognition import (
    RecognitionReport,
    Recognizer,
    RecognizerConfig,
    interaction_frames,
    load_recognizer,
    recognition_accuracy,
    save_recognizer,
    train_recognizer,
)
from .train import (
    TrainingError,
    TrainLog,
    TrainResult,
    build_models,
    derive_seeds,
    load_discriminator,
    load_generator,
    save_models,
    train_gan,
)
