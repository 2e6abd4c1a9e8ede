"""Skeleton data model, ingestion, normalization, windowing and splits."""

from .clip import (
    ClipError,
    InteractionClip,
    NormalizationTransform,
    dumps_clip,
    facing_transform,
    load_clip,
    load_dataset,
    loads_clip,
    normalize_interaction,
    save_clip,
    save_dataset,
    split_loso,
    stack_clips,
    subjects_of,
    window_clip,
)
from .sbu import SBUParseError, format_sbu_clip, load_sbu_directory, parse_sbu_clip
from .skeleton import (
    DEFAULT_PARTITION,
    DEFAULT_SKELETON,
    JOINT,
    JOINT_NAMES,
    N_JOINTS,
    PART_NAMES,
    POSE_DIM,
    TPOSE,
    PartitionSpec,
    ReferenceSkeleton,
    as_joints,
    assemble_pose,
    bone_lengths,
    partition_pose,
)
from .synthetic import make_synthetic_dataset
