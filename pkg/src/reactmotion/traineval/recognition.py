"""Action recognizer used to score how recognizable synthesized reactions are.

A stacked LSTM reads the interaction frame by frame (A and B concatenated
into 90-dim frames, or B alone with ``b_only``); a linear layer on the last
hidden state gives class logits.  Trained with cross-entropy and RMSprop.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..diffcore import (OptimizerState, ParamStore, checkpoint, clip_by_global_norm, constant, gradients, mean,
                        rmsprop_step, safe_log, softmax, sum_)
from ..layers import add_affine, add_lstm, affine, run_lstm
from ..motiondata.skeleton import POSE_DIM
from .config import config_hash


@dataclass
class RecognizerConfig:
    hidden: int = 512
    layers: int = 2
    epochs: int = 300
    lr: float = 0.01
    batch_size: int = 16
    seed: int = 0
    b_only: bool = False
    clip_norm: float | None = 5.0


def interaction_frames(clips, b_only: bool = False) -> np.ndarray:
    """(B, T, 90) stacked A+B frames, or (B, T, 45) with ``b_only``."""
    if b_only:
        return np.stack([c.motion_b for c in clips])
    return np.stack([np.concatenate([c.motion_a, c.motion_b], axis=1) for c in clips])


class Recognizer:
    def __init__(self, config: RecognizerConfig, n_classes: int, params: ParamStore | None = None):
        self.config = config
        self.n_classes = n_classes
        if params is None:
            params = ParamStore(config.seed)
            n_in = POSE_DIM if config.b_only else 2 * POSE_DIM
            for layer in range(config.layers):
                add_lstm(params, f"rec{layer}", n_in if layer == 0 else config.hidden, config.hidden)
            add_affine(params, "logits", config.hidden, n_classes)
        self.params = params

    def _probs(self, frames: np.ndarray):
        seq = [constant(frames[:, t]) for t in range(frames.shape[1])]
        for layer in range(self.config.layers):
            seq = [st.h for st in run_lstm(seq, self.params, f"rec{layer}")]
        return softmax(affine(seq[-1], self.params, "logits"), axis=-1)

    def predict_proba(self, clips) -> np.ndarray:
        """(n, N) class distribution per clip."""
        clips = list(clips)
        if not clips:
            raise ValueError("no clips")
        with self.params.frozen():
            return self._probs(interaction_frames(clips, self.config.b_only)).value.copy()

    def predict(self, clips) -> np.ndarray:
        """1-based predicted labels."""
        return np.argmax(self.predict_proba(clips), axis=1) + 1


def train_recognizer(clips, config: RecognizerConfig = RecognizerConfig(), n_classes: int | None = None) -> Recognizer:
    clips = list(clips)
    labels = np.array([c.label for c in clips], dtype=np.int64)
    if len(np.unique(labels)) < 2:
        raise ValueError("recognizer needs at least 2 classes")
    n_classes = n_classes or int(labels.max())
    model = Recognizer(config, n_classes)
    frames = interaction_frames(clips, config.b_only)
    onehot = np.eye(n_classes)[labels - 1]
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).generate_state(1)[0])
    state = OptimizerState(lr=config.lr)
    for _ in range(config.epochs):
        order = rng.permutation(len(clips))
        for lo in range(0, len(clips), config.batch_size):
            idx = order[lo:lo + config.batch_size]
            probs = model._probs(frames[idx])
            loss = -mean(sum_(constant(onehot[idx]) * safe_log(probs), axis=-1))
            grads, _ = clip_by_global_norm(gradients(loss, model.params), config.clip_norm)
            rmsprop_step(model.params, grads, state)
    return model


@dataclass
class RecognitionReport:
    per_class: dict[int, float]
    overall: float
    n: int


def recognition_accuracy(classifier, clips) -> RecognitionReport:
    """Fraction of clips whose predicted label (``classifier.predict``) is the true one."""
    clips = list(clips)
    if not clips:
        raise ValueError("empty test set")
    labels = np.array([c.label for c in clips])
    correct = np.asarray(classifier.predict(clips)) == labels
    per_class = {int(c): float(correct[labels == c].mean()) for c in np.unique(labels)}
    return RecognitionReport(per_class, float(correct.mean()), len(clips))


def save_recognizer(path, model: Recognizer) -> None:
    meta = {"model": "recognizer", "config": asdict(model.config), "n_classes": model.n_classes}
    checkpoint.save(path, model.params, config_hash(meta), meta)


def load_recognizer(path) -> Recognizer:
    store, header = checkpoint.load(path)
    meta = header.get("meta", {})
    if meta.get("model") != "recognizer":
        raise checkpoint.CheckpointError(f"{path} does not hold a recognizer checkpoint")
    return Recognizer(RecognizerConfig(**meta["config"]), meta["n_classes"], params=store)
