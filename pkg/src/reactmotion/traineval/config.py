from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

from ..discriminator import DiscriminatorConfig
from ..generator import GeneratorConfig
from ..losses import ContinuityParams, LossWeights

PRESETS = {
    "sbu": {"dataset": "sbu", "part_hidden": 40},
    "hhoi": {"dataset": "hhoi", "part_hidden": 60},
    # desk-scale settings used by the synthetic experiments and tests
    "synthetic": {"dataset": "synthetic", "part_hidden": 8, "disc_hidden": 16, "epochs": 300},
}

# the four loss combinations compared in the recognition ablation
LOSS_SUBSETS = ("adv", "adv+skl", "adv+skl+con", "adv+skl+con+l1")


@dataclass
class TrainConfig:
    dataset: str = "sbu"
    part_hidden: int = 40
    dec_hidden: int | None = None       # 5 * part_hidden when parts are used
    attn_hidden: int | None = None
    disc_hidden: int = 128
    n_classes: int | None = None        # inferred from the training labels
    lr: float = 0.01
    rho: float = 0.9
    eps: float = 1e-8
    batch_size: int = 16
    epochs: int = 1000
    seed: int = 0
    init: str = "uniform"
    alpha: float = 0.01
    beta: float = 0.01
    gamma: float = 1.0
    cont_dt: int = 5
    cont_k: int = 2
    cont_lambda: float = 0.1
    cont_hinge: bool = False
    loss_subset: str = "adv+skl+con+l1"
    use_attention: bool = True
    use_parts: bool = True
    use_multiclass: bool = True
    tanh_pose: bool = False
    smoothing: float = 0.9
    d_steps: int = 1
    g_steps: int = 1
    non_saturating: bool = False
    teacher_ratio: float = 0.0
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if not 0.0 < self.smoothing <= 1.0:
            raise ValueError("smoothing must lie in (0, 1]")
        if self.d_steps < 0 or self.g_steps < 1:
            raise ValueError("need d_steps >= 0 and g_steps >= 1")
        if self.loss_subset not in LOSS_SUBSETS:
            raise ValueError(f"loss_subset must be one of {LOSS_SUBSETS}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "TrainConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(**{**PRESETS[name], **overrides})

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def loss_weights(self) -> LossWeights:
        """Weights with the terms outside ``loss_subset`` zeroed."""
        on = set(self.loss_subset.split("+"))
        return LossWeights(self.alpha if "skl" in on else 0.0,
                           self.beta if "con" in on else 0.0,
                           self.gamma if "l1" in on else 0.0)

    def continuity(self) -> ContinuityParams:
        return ContinuityParams(self.cont_dt, self.cont_k, self.cont_lambda, self.cont_hinge)

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(self.part_hidden, self.dec_hidden, self.attn_hidden,
                               self.use_parts, self.use_attention, self.tanh_pose)

    def discriminator_config(self, n_classes: int) -> DiscriminatorConfig:
        return DiscriminatorConfig(self.disc_hidden, n_classes)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc) -> str:
    """Short SHA-256 digest of the canonical JSON form of ``doc``."""
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()[:16]
