"""SBU Kinect Interaction text files.

Each non-empty line holds 91 comma-separated numbers: the frame index, 45
coordinates of the active character A, then 45 of the reacting character B
(15 joints x (x, y, z), joint order as in ``skeleton.JOINT_NAMES``).
"""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np

from .clip import InteractionClip, normalize_interaction, window_clip
from .skeleton import POSE_DIM

N_FIELDS = 1 + 2 * POSE_DIM

SBU_CATEGORIES = {
    1: "approaching", 2: "departing", 3: "kicking", 4: "pushing",
    5: "shaking_hands", 6: "hugging", 7: "exchanging", 8: "punching",
}
EXCLUDED = ("approaching", "departing")  # the indicated character stands still


class SBUParseError(ValueError):
    pass


def parse_sbu_clip(text, label: int, subjects=("", ""), class_name: str = "",
                   prescale=None, source: str = "sbu") -> InteractionClip:
    """Parse one take.  ``text`` may be a string or a text stream.

    ``prescale`` is an optional ``(scale, offset)`` pair of 3-vectors applied
    per joint as ``x * scale + offset`` (e.g. to turn normalized device
    coordinates into meters).
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    frames, rows = [], []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != N_FIELDS:
            raise SBUParseError(f"line {lineno}: expected {N_FIELDS} fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise SBUParseError(f"line {lineno}: non-numeric field") from None
        if frames and values[0] <= frames[-1]:
            raise SBUParseError(f"line {lineno}: frame index {values[0]:g} does not increase")
        frames.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise SBUParseError("no frames")
    data = np.array(rows, dtype=np.float64)
    a, b = data[:, :POSE_DIM], data[:, POSE_DIM:]
    if prescale is not None:
        scale, offset = (np.asarray(v, dtype=np.float64) for v in prescale)
        a = (a.reshape(-1, 15, 3) * scale + offset).reshape(a.shape)
        b = (b.reshape(-1, 15, 3) * scale + offset).reshape(b.shape)
    return InteractionClip(a, b, label=label, subjects=tuple(subjects), source=source,
                           class_name=class_name)


def format_sbu_clip(clip: InteractionClip) -> str:
    lines = []
    for i, (a, b) in enumerate(zip(clip.motion_a, clip.motion_b), start=1):
        lines.append(",".join([str(i)] + [repr(float(v)) for v in a] + [repr(float(v)) for v in b]))
    return "\n".join(lines) + "\n"


_PAIR = re.compile(r"^(s\d+)(s\d+)$", re.IGNORECASE)


def _category_name(token: str) -> str | None:
    if token.isdigit():
        return SBU_CATEGORIES.get(int(token))
    name = token.lower().replace("-", "_").replace(" ", "_")
    return name if name in SBU_CATEGORIES.values() else None


def _take_files(take_dir: Path) -> list[Path]:
    if take_dir.is_file():
        return [take_dir]
    preferred = take_dir / "skeleton_pos.txt"
    if preferred.exists():
        return [preferred]
    return sorted(take_dir.glob("*.txt"))


def load_sbu_directory(root, exclude=EXCLUDED, normalize: bool = True, window: int | None = 40,
                       stride: int = 5, prescale=None) -> list[InteractionClip]:
    """Import a tree laid out as ``category/pair/take`` (``pair/category/take`` also accepted).

    Categories are SBU numeric codes or names; pairs look like ``s01s02``.
    Labels are assigned 1..N in SBU category order after exclusions.
    Clips shorter than the window are dropped.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"SBU root {root} is not a directory")
    kept = [name for code, name in sorted(SBU_CATEGORIES.items()) if name not in exclude]
    labels = {name: i + 1 for i, name in enumerate(kept)}

    found = []
    for first in sorted(p for p in root.iterdir() if p.is_dir()):
        for second in sorted(p for p in first.iterdir() if p.is_dir()):
            if _PAIR.match(first.name):
                pair_dir, cat_token = first, second.name
            else:
                pair_dir, cat_token = second, first.name
            category = _category_name(cat_token)
            pair = _PAIR.match(pair_dir.name)
            if category is None or pair is None or category not in labels:
                continue
            for take in sorted(second.iterdir()):
                for f in _take_files(take):
                    found.append((f, category, (pair.group(1).lower(), pair.group(2).lower())))

    clips = []
    for path, category, subjects in found:
        with open(path) as fh:
            clip = parse_sbu_clip(fh, labels[category], subjects, category, prescale=prescale)
        if normalize:
            clip, _ = normalize_interaction(clip)
        if window:
            clips.extend(window_clip(clip, window, stride))
        else:
            clips.append(clip)
    return clips
