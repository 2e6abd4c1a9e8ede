from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .skeleton import JOINT, POSE_DIM, as_joints

CLIP_FORMAT = "reactmotion-clip"
CLIP_VERSION = 1


class ClipError(ValueError):
    pass


@dataclass
class InteractionClip:
    """Paired motions of the active character A and the reacting character B.

    ``label`` is 1-based; class N+1 is reserved for synthesized motion.
    """

    motion_a: np.ndarray
    motion_b: np.ndarray
    label: int
    subjects: tuple[str, str] = ("", "")
    source: str = ""
    class_name: str = ""
    fps: float = 15.0

    def __post_init__(self):
        self.motion_a = np.asarray(self.motion_a, dtype=np.float64)
        self.motion_b = np.asarray(self.motion_b, dtype=np.float64)
        self.subjects = tuple(self.subjects)
        self.label = int(self.label)
        for name, m in (("motion_a", self.motion_a), ("motion_b", self.motion_b)):
            if m.ndim != 2 or m.shape[1] != POSE_DIM:
                raise ClipError(f"{name} must be (frames, {POSE_DIM}), got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ClipError(f"{name} contains non-finite coordinates")
        if self.motion_a.shape != self.motion_b.shape:
            raise ClipError(f"A and B lengths differ: {len(self.motion_a)} vs {len(self.motion_b)}")
        if len(self.motion_a) < 2:
            raise ClipError("a clip needs at least 2 frames")
        if self.label < 1:
            raise ClipError(f"labels are 1-based, got {self.label}")

    def __len__(self) -> int:
        return len(self.motion_a)

    def with_motion_b(self, motion_b) -> "InteractionClip":
        return replace(self, motion_b=np.array(motion_b, dtype=np.float64))


# ---------------------------------------------------------------------------
# facing normalization

@dataclass(frozen=True)
class NormalizationTransform:
    """Rigid map ``x -> rotation @ x + translation`` applied per joint."""

    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, motion) -> np.ndarray:
        joints = as_joints(motion)
        out = joints @ self.rotation.T + self.translation
        return out.reshape(np.shape(motion))


UP = np.array([0.0, 1.0, 0.0])


def facing_transform(pose) -> NormalizationTransform:
    joints = as_joints(pose)
    left, right = joints[JOINT["left_hip"]], joints[JOINT["right_hip"]]
    pelvis = 0.5 * (left + right)
    facing = np.cross(UP, right - left)
    facing[1] = 0.0
    norm = np.linalg.norm(facing)
    if norm < 1e-9:
        raise ClipError("degenerate facing direction: hips coincide in the ground plane")
    fx, fz = facing[0] / norm, facing[2] / norm
    # rotation about +y by -atan2(fx, fz) sends the facing vector to +z
    rotation = np.array([[fz, 0.0, -fx],
                         [0.0, 1.0, 0.0],
                         [fx, 0.0, fz]])
    return NormalizationTransform(rotation, -rotation @ pelvis)


def normalize_interaction(clip: InteractionClip) -> tuple[InteractionClip, NormalizationTransform]:
    """Express both characters in A's first-frame body frame."""
    transform = facing_transform(clip.motion_a[0])
    out = replace(clip, motion_a=transform.apply(clip.motion_a), motion_b=transform.apply(clip.motion_b))
    return out, transform


# ---------------------------------------------------------------------------
# windowing and splits

def window_clip(clip: InteractionClip, size: int = 40, stride: int = 5) -> list[InteractionClip]:
    if size < 2 or stride < 1:
        raise ValueError("need size >= 2 and stride >= 1")
    return [
        replace(clip, motion_a=clip.motion_a[s:s + size].copy(), motion_b=clip.motion_b[s:s + size].copy())
        for s in range(0, len(clip) - size + 1, stride)
    ]


def subjects_of(clips) -> list[str]:
    return sorted({s for c in clips for s in c.subjects if s})


def split_loso(clips, held_out: str) -> tuple[list[InteractionClip], list[InteractionClip]]:
    """Leave-one-subject-out: every clip the subject takes part in is test data."""
    if any(not any(c.subjects) for c in clips):
        raise ClipError("every clip needs subject identifiers for LOSO splits")
    train = [c for c in clips if held_out not in c.subjects]
    test = [c for c in clips if held_out in c.subjects]
    if not test:
        raise ClipError(f"unknown subject {held_out!r}")
    if not train:
        warnings.warn(f"every clip involves {held_out!r}; the training fold is empty", stacklevel=2)
    return train, test


# ---------------------------------------------------------------------------
# canonical clip documents

def clip_to_dict(clip: InteractionClip) -> dict:
    return {
        "format": CLIP_FORMAT,
        "version": CLIP_VERSION,
        "source": clip.source,
        "label": clip.label,
        "class_name": clip.class_name,
        "subjects": list(clip.subjects),
        "fps": clip.fps,
        "frames": len(clip),
        "frames_a": clip.motion_a.tolist(),
        "frames_b": clip.motion_b.tolist(),
    }


def clip_from_dict(doc: dict) -> InteractionClip:
    if doc.get("format") != CLIP_FORMAT:
        raise ClipError(f"not a {CLIP_FORMAT} document")
    if doc.get("version") != CLIP_VERSION:
        raise ClipError(f"unsupported clip version {doc.get('version')}")
    try:
        return InteractionClip(
            motion_a=np.array(doc["frames_a"], dtype=np.float64),
            motion_b=np.array(doc["frames_b"], dtype=np.float64),
            label=doc["label"],
            subjects=tuple(doc["subjects"]),
            source=doc.get("source", ""),
            class_name=doc.get("class_name", ""),
            fps=doc.get("fps", 15.0),
        )
    except KeyError as exc:
        raise ClipError(f"clip document is missing field {exc}") from None


def dumps_clip(clip: InteractionClip) -> str:
    return json.dumps(clip_to_dict(clip), sort_keys=True, indent=1) + "\n"


def loads_clip(text: str) -> InteractionClip:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClipError(f"malformed clip document: {exc}") from None
    return clip_from_dict(doc)


def save_clip(path, clip: InteractionClip) -> None:
    Path(path).write_text(dumps_clip(clip))


def load_clip(path) -> InteractionClip:
    return loads_clip(Path(path).read_text())


def save_dataset(directory, clips, prefix: str = "clip") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, clip in enumerate(clips):
        path = directory / f"{prefix}_{i:04d}.json"
        save_clip(path, clip)
        paths.append(path)
    return paths


def load_dataset(path) -> list[InteractionClip]:
    """A single clip file or every ``*.json`` clip in a directory (sorted by name)."""
    path = Path(path)
    if path.is_file():
        return [load_clip(path)]
    if not path.is_dir():
        raise FileNotFoundError(f"no clip file or directory at {path}")
    clips = []
    for p in sorted(path.glob("*.json")):
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ClipError(f"{p}: malformed JSON: {exc}") from None
        if isinstance(doc, dict) and doc.get("format") == CLIP_FORMAT:
            clips.append(clip_from_dict(doc))  # other JSON (configs, reports) is skipped
    if not clips:
        raise ClipError(f"no clip documents in {path}")
    return clips


def stack_clips(clips) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = {len(c) for c in clips}
    if len(lengths) != 1:
        raise ClipError(f"clips must share one length to be batched, got {sorted(lengths)}")
    a = np.stack([c.motion_a for c in clips])
    b = np.stack([c.motion_b for c in clips])
    labels = np.array([c.label for c in clips], dtype=np.int64)
    return a, b, labels
