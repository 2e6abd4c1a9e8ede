"""Adversarial and auxiliary objectives.

Batched conventions: probabilities are ``(B, N+1)`` with the synthesized
class last, labels are 1-based, expectations are batch means, and the
per-sequence sums (bone, continuity, L1) are averaged over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffcore import Node, abs_, as_node, constant, maximum, mean, reshape, safe_log, sqrt, square, sum_
from .motiondata.skeleton import DEFAULT_SKELETON, N_JOINTS, ReferenceSkeleton


@dataclass
class LossWeights:
    alpha: float = 0.01   # bone
    beta: float = 0.01    # continuity
    gamma: float = 1.0    # L1

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class ContinuityParams:
    dt: int = 5
    k: int = 2
    lam: float = 0.1
    hinge: bool = False    # drop the inner |.|, leaving max(d1 - d2 + lam, 0)

    def __post_init__(self):
        if self.dt < 1 or self.k < 1:
            raise ValueError("dt and k must be >= 1")


# k=1 setting; both distances coincide, so the loss is constant with zero gradient
LITERAL_CONTINUITY = ContinuityParams(dt=5, k=1, lam=0.1)


@dataclass
class Batch:
    motion_a: np.ndarray
    motion_b: np.ndarray
    labels: np.ndarray     # 1-based

    def __len__(self):
        return len(self.labels)


def _batched(motion) -> Node:
    node = as_node(motion)
    if node.value.ndim == 2:
        node = node[None]
    return node


def _onehot(labels, width: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(labels) == 0:
        raise ValueError("empty batch")
    if np.any(labels < 1) or np.any(labels >= width):
        raise ValueError(f"labels must lie in 1..{width - 1} (class {width} is the synthesized class)")
    out = np.zeros((len(labels), width))
    out[np.arange(len(labels)), labels - 1] = 1.0
    return out


def log_conditional(probs, labels) -> Node:
    """log p(y | x, y < N+1): label probability renormalized over the real classes."""
    probs = as_node(probs)
    width = probs.value.shape[-1]
    pick = constant(_onehot(labels, width))
    log_py = sum_(pick * safe_log(probs), axis=-1)
    return log_py - safe_log(sum_(probs[:, :width - 1], axis=-1))


def sup_generated(probs_fake, labels_fake) -> Node:
    """-E_G log[p(y|x, y<N+1) / p(N+1|x)]."""
    probs_fake = as_node(probs_fake)
    log_fake = safe_log(probs_fake[:, probs_fake.value.shape[-1] - 1])
    return -mean(log_conditional(probs_fake, labels_fake) - log_fake)


def sup_real(probs_real, labels_real) -> Node:
    """E_real log p(y|x, y<N+1)."""
    return mean(log_conditional(probs_real, labels_real))


def loss_sup(probs_real, labels_real, probs_fake, labels_fake) -> Node:
    return sup_generated(probs_fake, labels_fake) + sup_real(probs_real, labels_real)


def _nonempty(x) -> Node:
    x = as_node(x)
    if x.value.size == 0:
        raise ValueError("empty batch")
    return x


def loss_unsup(d_real, d_fake) -> Node:
    """E_real log D_b(x) + E_G log(1 - D_b(G(x)))."""
    d_real, d_fake = _nonempty(d_real), _nonempty(d_fake)
    return mean(safe_log(d_real)) + mean(safe_log(1.0 - d_fake))


def loss_unsup_syn(p_syn_real, p_syn_fake) -> Node:
    """Same objective written with p(y_syn | x) = 1 - D_b(x)."""
    p_syn_real, p_syn_fake = _nonempty(p_syn_real), _nonempty(p_syn_fake)
    return mean(safe_log(1.0 - p_syn_real)) + mean(safe_log(p_syn_fake))


def loss_bone(motion, skeleton: ReferenceSkeleton = DEFAULT_SKELETON) -> Node:
    """sum_t sum_j |bone_j(x_t) - ref_j| per sequence, averaged over the batch."""
    m = _batched(motion)
    B, T = m.value.shape[:2]
    joints = reshape(m, (B, T, N_JOINTS, 3))
    diff = joints[:, :, skeleton.children] - joints[:, :, skeleton.parents]
    # floor keeps the sqrt derivative finite for collapsed bones
    lengths = sqrt(maximum(sum_(square(diff), axis=-1), 1e-18))
    residual = abs_(lengths - constant(np.array(skeleton.ref_lengths)))
    return mean(sum_(residual, axis=(1, 2)))


def loss_continuity(motion, params: ContinuityParams = ContinuityParams()) -> Node:
    """sum_t max(| |x_{t+dt}-x_t|^2 - |x_{t+k dt}-x_t|^2 + lam |, 0) per sequence."""
    m = _batched(motion)
    T = m.value.shape[1]
    span = params.k * params.dt
    if T <= span:
        raise ValueError(f"sequence of {T} frames is too short for k*dt = {span}")
    n = T - span
    base = m[:, :n]
    near = sum_(square(m[:, params.dt:params.dt + n] - base), axis=-1)
    far = sum_(square(m[:, span:span + n] - base), axis=-1)
    inner = near - far + params.lam
    terms = maximum(inner, 0.0) if params.hinge else maximum(abs_(inner), 0.0)
    return mean(sum_(terms, axis=1))


def loss_contractive(pred, truth) -> Node:
    """sum_t sum_coords |x_hat - x| per sequence (L1)."""
    pred, truth = _batched(pred), _batched(truth)
    if pred.value.shape != truth.value.shape:
        raise ValueError(f"length mismatch: {pred.value.shape} vs {truth.value.shape}")
    return mean(sum_(abs_(pred - truth), axis=(1, 2)))


# ---------------------------------------------------------------------------
# combined objectives

@dataclass
class Objective:
    total: Node
    terms: dict[str, float] = field(default_factory=dict)
    fake: np.ndarray | None = None


def generator_objective(batch: Batch, generator, discriminator, weights: LossWeights = LossWeights(),
                        continuity: ContinuityParams = ContinuityParams(),
                        skeleton: ReferenceSkeleton = DEFAULT_SKELETON, non_saturating: bool = False,
                        use_multiclass: bool = True, teacher_ratio: float = 0.0, rng=None,
                        graph=None) -> Objective:
    """G's side of the min-max objective (minimized).

    sup_generated + E log(1 - D_b(G(a))) + alpha*bone + beta*continuity + gamma*L1;
    ``non_saturating`` swaps the middle term for -E log D_b(G(a)).  A prebuilt
    ``graph`` (from ``generator.forward``) is reused instead of running G again.
    """
    if graph is None:
        graph = generator.forward(batch.motion_a, teacher=batch.motion_b, teacher_ratio=teacher_ratio, rng=rng)
    fake = graph.motion
    with discriminator.params.frozen():
        feature = discriminator.features(fake)
        d_fake = discriminator.binary(feature)
        probs = discriminator.multiclass(feature) if use_multiclass else None

    terms: dict[str, Node] = {}
    if non_saturating:
        terms["adv"] = -mean(safe_log(d_fake))
    else:
        terms["adv"] = mean(safe_log(1.0 - d_fake))
    if use_multiclass:
        terms["sup"] = sup_generated(probs, batch.labels)
    terms["skl"] = loss_bone(fake, skeleton)
    if fake.value.shape[1] > continuity.k * continuity.dt:
        terms["con"] = loss_continuity(fake, continuity)
    elif weights.beta > 0:
        raise ValueError("clips too short for the continuity loss")
    terms["l1"] = loss_contractive(fake, batch.motion_b)

    scale = {"skl": weights.alpha, "con": weights.beta, "l1": weights.gamma}
    total = None
    for name, node in terms.items():
        w = scale.get(name, 1.0)
        if w == 0.0:
            continue
        piece = node if w == 1.0 else node * w
        total = piece if total is None else total + piece
    values = {name: float(node.value) for name, node in terms.items()}
    values["g_loss"] = float(total.value)
    values["d_fake_mean"] = float(np.mean(d_fake.value))
    return Objective(total, values, fake.value)


def discriminator_objective(batch: Batch, fake: np.ndarray, discriminator, smoothing: float = 0.9,
                            use_multiclass: bool = True) -> Objective:
    """-(L_sup + L_unsup) for D to minimize, real binary targets smoothed to ``smoothing``.

    ``fake`` is G's output for ``batch.motion_a`` computed with G frozen.
    """
    real = np.asarray(batch.motion_b, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    n = len(real)
    if n == 0 or len(fake) == 0:
        raise ValueError("empty batch")
    feature = discriminator.features(np.concatenate([real, fake], axis=0))
    d = discriminator.binary(feature)
    d_real, d_fake = d[:n], d[n:]
    unsup = (smoothing * mean(safe_log(d_real)) + (1.0 - smoothing) * mean(safe_log(1.0 - d_real))
             + mean(safe_log(1.0 - d_fake)))
    objective = unsup
    terms = {"d_unsup": float(unsup.value)}
    if use_multiclass:
        probs = discriminator.multiclass(feature)
        sup = loss_sup(probs[:n], batch.labels, probs[n:], batch.labels)
        objective = objective + sup
        terms["d_sup"] = float(sup.value)
    total = -objective
    terms["d_loss"] = float(total.value)
    terms["acc_real"] = float(np.mean(d_real.value > 0.5))
    terms["acc_fake"] = float(np.mean(d_fake.value < 0.5))
    return Objective(total, terms, fake)
