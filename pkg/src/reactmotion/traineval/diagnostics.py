"""End-to-end gradient check over a tiny generator + discriminator pipeline."""

from __future__ import annotations

import numpy as np

from ..diffcore import GradCheckResult, ParamStore, concat, constant, grad_check
from ..discriminator import Discriminator, DiscriminatorConfig
from ..generator import Generator, GeneratorConfig
from ..losses import ContinuityParams, loss_bone, loss_continuity, loss_contractive, loss_sup, loss_unsup
from ..motiondata.skeleton import POSE_DIM, TPOSE


def pipeline_loss(gen: Generator, disc: Discriminator, motion_a, motion_b, labels,
                  continuity: ContinuityParams, weights=(0.01, 0.01, 1.0)):
    """All five loss terms in one scalar, every parameter of G and D live."""
    fake = gen.forward(motion_a).motion
    n = len(labels)
    feature = disc.features(concat([constant(motion_b), fake], axis=0))
    d, probs = disc.binary(feature), disc.multiclass(feature)
    alpha, beta, gamma = weights
    return (loss_sup(probs[:n], labels, probs[n:], labels) + loss_unsup(d[:n], d[n:])
            + loss_bone(fake) * alpha + loss_continuity(fake, continuity) * beta
            + loss_contractive(fake, motion_b) * gamma)


def pipeline_grad_check(seed: int = 0, part_hidden: int = 3, frames: int = 4, n_classes: int = 2,
                        batch: int = 2, disc_hidden: int = 4, n_samples: int | None = 300,
                        step: float = 2e-3) -> GradCheckResult:
    """Central-difference check of every G and D parameter through the full loss.

    The check point is chosen so the differences are informative: G's output
    bias is set to an inflated T-pose (bones well away from collapse and from
    their reference lengths), and the real B sits 0.01-0.02 from G's output
    in every coordinate, which keeps each |.| in the L1 term away from its
    kink while the loss stays O(1).  The larger step is there because many
    attention entries have gradients near 1e-9, where roundoff in an O(1)
    loss swamps a 1e-5 difference.
    """
    rng = np.random.default_rng(seed)
    base = np.tile(TPOSE.reshape(-1), (batch, frames, 1))
    motion_a = base + 0.1 * rng.standard_normal((batch, frames, POSE_DIM))
    labels = (np.arange(batch) % n_classes) + 1
    gen = Generator(GeneratorConfig(part_hidden), seed=seed)
    disc = Discriminator(DiscriminatorConfig(disc_hidden, n_classes), seed=seed + 1)
    gen.params["out.b"] = 1.3 * TPOSE.reshape(-1)
    fake, _ = gen.synthesize_batch(motion_a)
    offsets = rng.uniform(0.01, 0.02, fake.shape) * rng.choice([-1.0, 1.0], fake.shape)
    motion_b = fake + offsets
    # continuity needs frames > k*dt, so dt=1 on the 4-frame clip
    continuity = ContinuityParams(dt=1, k=2, lam=0.1)
    params = ParamStore.union(gen.params, disc.params)
    return grad_check(lambda _: pipeline_loss(gen, disc, motion_a, motion_b, labels, continuity),
                      params, step=step, n_samples=n_samples, seed=seed)
