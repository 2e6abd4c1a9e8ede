"""Motion-space metrics and retrieval baselines."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..motiondata.clip import InteractionClip
from ..motiondata.skeleton import N_JOINTS, POSE_DIM


def afd(pred, truth, per_joint: bool = False) -> float:
    """Average frame distance: mean over frames of the squared pose residual norm.

    ``per_joint`` divides by the joint count, i.e. averages the squared
    per-joint displacement instead of summing it.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.ndim != 2 or len(pred) < 1:
        raise ValueError("expected a (T, D) motion with T >= 1")
    value = float(np.mean(np.sum((pred - truth) ** 2, axis=1)))
    return value / N_JOINTS if per_joint else value


def map_ordered(fn, items, jobs: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally over a process pool; order is kept."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _afd_pair(pair):
    pred, truth, per_joint = pair
    return afd(pred, truth, per_joint)


@dataclass
class AFDReport:
    per_clip: list[float]
    labels: list[int]

    def per_class(self) -> dict[int, float]:
        labels = np.array(self.labels)
        values = np.array(self.per_clip)
        return {int(c): float(values[labels == c].mean()) for c in np.unique(labels)}

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_clip))


def afd_report(preds, clips, per_joint: bool = False, jobs: int = 1) -> AFDReport:
    """AFD of each predicted B-motion against its clip's real B."""
    clips = list(clips)
    if len(preds) != len(clips):
        raise ValueError("one prediction per clip")
    if not clips:
        raise ValueError("empty test set")
    values = map_ordered(_afd_pair, [(p, c.motion_b, per_joint) for p, c in zip(preds, clips)], jobs)
    return AFDReport(values, [c.label for c in clips])


# ---------------------------------------------------------------------------
# baselines

class NearestNeighbour:
    """Frame-wise retrieval: each A-frame maps to the B-frame paired with its nearest training A-frame."""

    def __init__(self, train_clips, chunk: int = 256):
        train_clips = list(train_clips)
        if not train_clips:
            raise ValueError("training set is empty")
        # clip-major, frame-minor order, so argmin's first hit is the lowest (clip, frame)
        self.frames_a = np.concatenate([c.motion_a for c in train_clips])
        self.frames_b = np.concatenate([c.motion_b for c in train_clips])
        self.chunk = chunk

    def indices(self, query_a) -> np.ndarray:
        query_a = np.asarray(query_a, dtype=np.float64)
        if query_a.ndim != 2 or query_a.shape[1] != self.frames_a.shape[1]:
            raise ValueError(f"query must be (T, {self.frames_a.shape[1]}), got {query_a.shape}")
        out = np.empty(len(query_a), dtype=np.int64)
        for lo in range(0, len(query_a), self.chunk):
            q = query_a[lo:lo + self.chunk]
            d2 = np.sum((q[:, None, :] - self.frames_a[None]) ** 2, axis=-1)
            out[lo:lo + len(q)] = np.argmin(d2, axis=1)
        return out

    def __call__(self, query_a) -> np.ndarray:
        return self.frames_b[self.indices(query_a)].copy()


def nn_baseline(train_clips, query_a) -> np.ndarray:
    return NearestNeighbour(train_clips)(query_a)


class MeanPosePredictor:
    """Per-class average of B from the training set.

    ``static`` (default) averages over clips and frames, giving one pose per
    class held for the whole clip; ``framewise`` keeps the time axis.
    """

    def __init__(self, train_clips, mode: str = "static"):
        if mode not in ("static", "framewise"):
            raise ValueError("mode is 'static' or 'framewise'")
        train_clips = list(train_clips)
        if not train_clips:
            raise ValueError("training set is empty")
        self.mode = mode
        self.means: dict[int, np.ndarray] = {}
        for label in sorted({c.label for c in train_clips}):
            stacked = np.stack([c.motion_b for c in train_clips if c.label == label])
            self.means[label] = stacked.mean(axis=(0, 1)) if mode == "static" else stacked.mean(axis=0)

    def __call__(self, clip: InteractionClip) -> np.ndarray:
        if clip.label not in self.means:
            raise ValueError(f"no training clips for class {clip.label}")
        mean = self.means[clip.label]
        T = len(clip)
        if self.mode == "static":
            return np.tile(mean, (T, 1))
        if len(mean) != T:
            raise ValueError("framewise mean needs clips of the training length")
        return mean.copy()


def synthesize_clips(generator, clips, batch_size: int = 64) -> list[np.ndarray]:
    """Run the generator over every clip's A-motion (batched by equal length)."""
    clips = list(clips)
    out: list[np.ndarray | None] = [None] * len(clips)
    by_len: dict[int, list[int]] = {}
    for i, c in enumerate(clips):
        by_len.setdefault(len(c), []).append(i)
    for idx in by_len.values():
        for lo in range(0, len(idx), batch_size):
            part = idx[lo:lo + batch_size]
            motion, _ = generator.synthesize_batch(np.stack([clips[i].motion_a for i in part]))
            for j, i in enumerate(part):
                out[i] = motion[j].reshape(-1, POSE_DIM)
    return out
