"""Two-class toy interactions with closed-form motion, for desk-scale checks.

Class 1 ("push"): A's right hand moves +z by 0.5*sin(pi*t/S); B's whole body
moves -z by 0.4*max(sin(pi*(t-3)/S), 0).
Class 2 ("wave"): A's right elbow and hand rise (+y) by 0.5*sin(pi*t/S); B's
do the same three frames later (clamped at 0).
Frames are 0-based, so t=0 is the resting template for both characters.
"""

from __future__ import annotations

import numpy as np

from .clip import InteractionClip
from .skeleton import JOINT, POSE_DIM, TPOSE

LAG = 3
CLASS_NAMES = {1: "push", 2: "wave"}

# B stands 1.2 m in front of A, turned to face it.
B_TEMPLATE = TPOSE * np.array([-1.0, 1.0, -1.0]) + np.array([0.0, 0.0, 1.2])
A_TEMPLATE = TPOSE.copy()


def _phase(t, length, lag=0):
    return np.maximum(np.sin(np.pi * (np.asarray(t, dtype=np.float64) - lag) / length), 0.0)


def clean_motion(label: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free (A, B) motions of one class, shapes ``(length, 45)``."""
    t = np.arange(length)
    a = np.repeat(A_TEMPLATE[None], length, axis=0)
    b = np.repeat(B_TEMPLATE[None], length, axis=0)
    lead = 0.5 * np.sin(np.pi * t / length)
    if label == 1:
        a[:, JOINT["right_hand"], 2] += lead
        b[:, :, 2] -= (0.4 * _phase(t, length, LAG))[:, None]
    elif label == 2:
        follow = 0.5 * _phase(t, length, LAG)
        for joint in ("right_elbow", "right_hand"):
            a[:, JOINT[joint], 1] += lead
            b[:, JOINT[joint], 1] += follow
    else:
        raise ValueError(f"synthetic classes are 1 and 2, got {label}")
    return a.reshape(length, POSE_DIM), b.reshape(length, POSE_DIM)


def make_synthetic_dataset(classes: int = 2, clips_per_class: int = 8, length: int = 40,
                           noise: float = 0.0, seed: int = 0, n_pairs: int = 3) -> list[InteractionClip]:
    """Clips ordered class by class; subject pairs cycle over ``n_pairs`` pairs."""
    if length < 10:
        raise ValueError("synthetic clips need at least 10 frames")
    if classes not in (1, 2):
        raise ValueError("the synthetic generator defines two classes")
    rng = np.random.default_rng(seed)
    clips = []
    for label in range(1, classes + 1):
        a0, b0 = clean_motion(label, length)
        for i in range(clips_per_class):
            a = a0 + noise * rng.standard_normal(a0.shape) if noise > 0 else a0.copy()
            b = b0 + noise * rng.standard_normal(b0.shape) if noise > 0 else b0.copy()
            k = (len(clips)) % n_pairs
            clips.append(InteractionClip(a, b, label=label,
                                         subjects=(f"s{2 * k + 1:02d}", f"s{2 * k + 2:02d}"),
                                         source="synthetic", class_name=CLASS_NAMES[label]))
    return clips
