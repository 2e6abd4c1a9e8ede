"""Dual discriminator over B's motion only.

A bidirectional LSTM reads the reaction; the final forward and backward
hidden states form one shared feature.  Two affine heads sit on it: a binary
real/synthesized probability D_b and an (N+1)-way class distribution D_m
whose last class means "synthesized".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import Node, ParamStore, as_node, sigmoid, softmax, stack
from .layers import add_affine, add_lstm, affine, merge_groups, run_lstm_group
from .motiondata.skeleton import POSE_DIM


@dataclass
class DiscriminatorConfig:
    hidden: int = 128
    n_classes: int = 6     # N real classes; the head has N+1 outputs


class Discriminator:
    def __init__(self, config: DiscriminatorConfig | None = None, seed: int = 0, init: str = "uniform",
                 params: ParamStore | None = None):
        self.config = config or DiscriminatorConfig()
        if params is None:
            params = ParamStore(seed, init)
            add_lstm(params, "fwd", POSE_DIM, self.config.hidden)
            add_lstm(params, "bwd", POSE_DIM, self.config.hidden)
            add_affine(params, "bin", 2 * self.config.hidden, 1)
            add_affine(params, "cls", 2 * self.config.hidden, self.config.n_classes + 1)
        self.params = params

    @property
    def n_classes(self) -> int:
        return self.config.n_classes

    def features(self, motion_b) -> Node:
        """``(B, T, 45)`` motion (array or node) -> ``(B, 2H)`` shared feature."""
        motion_b = as_node(motion_b)
        T = motion_b.value.shape[1]
        if T < 2:
            raise ValueError("need at least 2 frames")
        # group 0 reads frames 1..T, group 1 reads T..1
        if motion_b.kind == "const":
            both = np.stack([motion_b.value, motion_b.value[:, ::-1]])
            frames = [both[:, :, t] for t in range(T)]
        else:
            both = stack([motion_b, motion_b[:, ::-1]], axis=0)
            frames = [both[:, :, t] for t in range(T)]
        states = run_lstm_group(frames, self.params, ["fwd", "bwd"])
        return merge_groups(states[-1].h)

    def binary(self, feature: Node) -> Node:
        """D_b(x): probability the motion is real, shape ``(B,)``."""
        return sigmoid(affine(feature, self.params, "bin"))[:, 0]

    def multiclass(self, feature: Node) -> Node:
        """p_{D_m}(y | x) over N real classes plus the synthesized class, ``(B, N+1)``."""
        return softmax(affine(feature, self.params, "cls"), axis=-1)

    # numpy conveniences ---------------------------------------------------

    def extract_features(self, motion_b) -> np.ndarray:
        """Single ``(T, 45)`` motion -> feature vector."""
        with self.params.frozen():
            return self.features(np.asarray(motion_b, dtype=np.float64)[None]).value[0]

    def disc_binary(self, feature) -> float:
        with self.params.frozen():
            return float(self.binary(as_node(np.asarray(feature, dtype=np.float64)[None])).value[0])

    def disc_multiclass(self, feature) -> np.ndarray:
        with self.params.frozen():
            return self.multiclass(as_node(np.asarray(feature, dtype=np.float64)[None])).value[0]
