"""Alternating adversarial training.

Each batch does ``d_steps`` discriminator updates on G's current output,
then ``g_steps`` generator updates against the refreshed D.  Both use
RMSprop with optional global-norm clipping.  All randomness comes from
``config.seed``: parameter init, the per-epoch shuffle, teacher forcing.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from ..diffcore import NonFiniteGradient, OptimizerState, checkpoint, clip_by_global_norm, gradients, rmsprop_step
from ..discriminator import Discriminator
from ..generator import Generator
from ..losses import Batch, discriminator_objective, generator_objective
from ..motiondata.clip import stack_clips
from ..motiondata.skeleton import DEFAULT_PARTITION, DEFAULT_SKELETON, PartitionSpec, ReferenceSkeleton
from .config import TrainConfig

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainLog:
    """Per-epoch training record.

    Each record holds ``epoch`` (1-based), the batch-averaged loss terms
    (``adv``, ``sup``, ``skl``, ``con``, ``l1``, ``g_loss`` for G;
    ``d_unsup``, ``d_sup``, ``d_loss`` for D), D's accuracy on real and
    synthesized batches (``acc_real``, ``acc_fake``), the mean D_b on fakes
    seen by G (``d_fake_mean``), pre-clipping gradient norms
    (``g_grad_norm``, ``d_grad_norm``), ``seed``, ``config_hash`` and the
    wall-clock ``seconds`` for the epoch.  The serialized form omits
    ``seconds`` unless asked, so identical runs give identical files.
    """

    seed: int
    config_hash: str
    records: list[dict] = field(default_factory=list)

    TIMING_KEYS = ("seconds",)

    def __len__(self):
        return len(self.records)

    def curve(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records], dtype=np.float64)

    def to_jsonl(self, timing: bool = False) -> str:
        lines = []
        for rec in self.records:
            if not timing:
                rec = {k: v for k, v in rec.items() if k not in self.TIMING_KEYS}
            lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
        return "".join(line + "\n" for line in lines)

    def save(self, path, timing_path=None) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")
        if timing_path is not None:
            rows = [{"epoch": r["epoch"], "seconds": r.get("seconds")} for r in self.records]
            Path(timing_path).write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrainLog":
        records = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
        if not records:
            return cls(seed=0, config_hash="")
        return cls(seed=records[0]["seed"], config_hash=records[0]["config_hash"], records=records)


class TrainResult(NamedTuple):
    generator: Generator
    discriminator: Discriminator
    log: TrainLog


def derive_seeds(seed: int) -> dict[str, int]:
    """Independent integer seeds for each random stream of a run."""
    state = np.random.SeedSequence(seed).generate_state(4)
    return dict(zip(("generator", "discriminator", "shuffle", "teacher"), (int(s) for s in state)))


def build_models(config: TrainConfig, n_classes: int,
                 partition: PartitionSpec = DEFAULT_PARTITION) -> tuple[Generator, Discriminator]:
    seeds = derive_seeds(config.seed)
    gen = Generator(config.generator_config(), partition, seed=seeds["generator"], init=config.init)
    disc = Discriminator(config.discriminator_config(n_classes), seed=seeds["discriminator"], init=config.init)
    return gen, disc


def infer_n_classes(clips, config: TrainConfig) -> int:
    top = max(c.label for c in clips)
    if config.n_classes is None:
        return top
    if top > config.n_classes:
        raise ValueError(f"label {top} exceeds n_classes={config.n_classes}")
    return config.n_classes


def _check_clips(clips) -> None:
    if not clips:
        raise ValueError("training set is empty")
    lengths = {len(c) for c in clips}
    if len(lengths) != 1:
        raise ValueError(f"training clips must share one length (window them first), got {sorted(lengths)}")


def _update(store, loss, state: OptimizerState, clip_norm, what: str, epoch: int, batch: int) -> float:
    grads = gradients(loss, store)
    grads, norm = clip_by_global_norm(grads, clip_norm)
    try:
        rmsprop_step(store, grads, state)
    except NonFiniteGradient as exc:
        raise TrainingError(f"epoch {epoch} batch {batch}: {what} update failed: {exc}") from exc
    return norm


def _finite_or_raise(terms: dict, what: str, epoch: int, batch: int) -> None:
    bad = {k: v for k, v in terms.items() if not np.isfinite(v)}
    if bad:
        raise TrainingError(f"epoch {epoch} batch {batch}: non-finite {what} loss terms {bad}")


def train_gan(clips, config: TrainConfig, skeleton: ReferenceSkeleton = DEFAULT_SKELETON,
              partition: PartitionSpec = DEFAULT_PARTITION,
              callback: Callable[[dict], None] | None = None,
              models: tuple[Generator, Discriminator] | None = None) -> TrainResult:
    """Train G and D on normalized, equal-length clips; returns final models and the log."""
    _check_clips(clips)
    n_classes = infer_n_classes(clips, config)
    gen, disc = models if models is not None else build_models(config, n_classes, partition)
    seeds = derive_seeds(config.seed)
    shuffle_rng = np.random.default_rng(seeds["shuffle"])
    teacher_rng = np.random.default_rng(seeds["teacher"])
    motion_a, motion_b, labels = stack_clips(clips)
    g_state = OptimizerState(config.lr, config.rho, config.eps)
    d_state = OptimizerState(config.lr, config.rho, config.eps)
    weights, continuity = config.loss_weights(), config.continuity()
    train_log = TrainLog(seed=config.seed, config_hash=config.hash())
    n = len(clips)

    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = shuffle_rng.permutation(n)
        sums: dict[str, float] = {}
        n_batches = 0
        for bi, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            batch = Batch(motion_a[idx], motion_b[idx], labels[idx])
            terms: dict[str, float] = {}
            # G's graph is built once; D trains on its values, G's step reuses it
            graph = gen.forward(batch.motion_a, teacher=batch.motion_b,
                                teacher_ratio=config.teacher_ratio, rng=teacher_rng)
            fake = graph.motion.value
            for _ in range(config.d_steps):
                d_obj = discriminator_objective(batch, fake, disc, config.smoothing, config.use_multiclass)
                _finite_or_raise(d_obj.terms, "discriminator", epoch, bi)
                terms["d_grad_norm"] = _update(disc.params, d_obj.total, d_state, config.clip_norm,
                                               "discriminator", epoch, bi)
                terms.update(d_obj.terms)
            for step in range(config.g_steps):
                g_obj = generator_objective(batch, gen, disc, weights, continuity, skeleton,
                                            config.non_saturating, config.use_multiclass,
                                            config.teacher_ratio, teacher_rng,
                                            graph=graph if step == 0 else None)
                _finite_or_raise(g_obj.terms, "generator", epoch, bi)
                terms["g_grad_norm"] = _update(gen.params, g_obj.total, g_state, config.clip_norm,
                                               "generator", epoch, bi)
                terms.update(g_obj.terms)
            for k, v in terms.items():
                sums[k] = sums.get(k, 0.0) + v
            n_batches += 1
        record = {"epoch": epoch, "seed": config.seed, "config_hash": train_log.config_hash}
        record.update({k: v / n_batches for k, v in sorted(sums.items())})
        record["seconds"] = time.perf_counter() - start
        train_log.records.append(record)
        if callback is not None:
            callback(record)
        log.debug("epoch %d: %s", epoch, record)
    return TrainResult(gen, disc, train_log)


# ---------------------------------------------------------------------------
# checkpoints

def save_models(directory, result: TrainResult, config: TrainConfig) -> dict[str, Path]:
    """Write ``generator.ckpt``, ``discriminator.ckpt`` and ``train_log.jsonl``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    h = config.hash()
    meta = {"config": config.to_dict(), "n_classes": result.discriminator.n_classes}
    paths = {"generator": directory / "generator.ckpt", "discriminator": directory / "discriminator.ckpt",
             "log": directory / "train_log.jsonl"}
    checkpoint.save(paths["generator"], result.generator.params, h, {**meta, "model": "generator"})
    checkpoint.save(paths["discriminator"], result.discriminator.params, h, {**meta, "model": "discriminator"})
    result.log.save(paths["log"])
    return paths


def _load(path, model: str):
    store, header = checkpoint.load(path)
    meta = header.get("meta", {})
    if meta.get("model") != model:
        raise checkpoint.CheckpointError(f"{path} does not hold a {model} checkpoint")
    return store, TrainConfig.from_dict(meta["config"]), meta


def load_generator(path, partition: PartitionSpec = DEFAULT_PARTITION) -> tuple[Generator, TrainConfig]:
    store, config, _ = _load(path, "generator")
    return Generator(config.generator_config(), partition, params=store), config


def load_discriminator(path) -> tuple[Discriminator, TrainConfig]:
    store, config, meta = _load(path, "discriminator")
    return Discriminator(config.discriminator_config(meta["n_classes"]), params=store), config
