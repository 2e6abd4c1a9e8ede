"""Part-based attentive seq2seq generator: A's motion in, B's motion out.

Encoder: one LSTM per body part over that part's stacked joint coordinates;
the five hidden states are concatenated per frame.  Decoder: an LSTM whose
gates read [previous pose; previous hidden; attention context], followed by a
linear pose head.  Ablations drop attention and/or the part split.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diffcore import Node, ParamStore, concat, constant, softmax, stack, sum_, tanh
from .layers import GateState, add_affine, add_lstm, affine, lstm_gates, merge_groups, run_lstm, run_lstm_group
from .motiondata.skeleton import DEFAULT_PARTITION, POSE_DIM, PartitionSpec


@dataclass
class GeneratorConfig:
    part_hidden: int = 40
    dec_hidden: int | None = None      # default: n_parts * part_hidden
    attn_hidden: int | None = None     # default: dec_hidden
    use_parts: bool = True
    use_attention: bool = True
    tanh_pose: bool = False            # literal tanh row for the pose, then a linear layer

    def resolve(self, n_parts: int = 5) -> "GeneratorConfig":
        dec = self.dec_hidden if self.dec_hidden is not None else n_parts * self.part_hidden
        if self.use_parts and dec != n_parts * self.part_hidden:
            raise ValueError(f"decoder width must be {n_parts} x part width with part encoding "
                             f"({dec} != {n_parts} x {self.part_hidden})")
        attn = self.attn_hidden if self.attn_hidden is not None else dec
        return GeneratorConfig(self.part_hidden, dec, attn, self.use_parts, self.use_attention, self.tanh_pose)


@dataclass
class AttentionMap:
    """``weights[s, t]``: weight of encoder frame s (A) when decoding frame t (B)."""

    weights: np.ndarray

    HEADER = "attention map; rows s = encoder frame of A, columns t = decoder frame of B; S={S} T={T}"

    def save(self, path) -> None:
        S, T = self.weights.shape
        np.savetxt(path, self.weights, fmt="%.17g", header=self.HEADER.format(S=S, T=T))

    @classmethod
    def load(cls, path) -> "AttentionMap":
        return cls(np.atleast_2d(np.loadtxt(Path(path))))


@dataclass
class SynthesisGraph:
    poses: list[Node]                # T nodes, (B, 45)
    motion: Node                     # (B, T, 45)
    attention: list[Node] | None     # T nodes, (S, B, 1)
    states: list[GateState]

    def attention_maps(self) -> np.ndarray | None:
        """(B, S, T) array of attention weights."""
        if self.attention is None:
            return None
        cols = np.stack([a.value[:, :, 0] for a in self.attention], axis=-1)  # (S, B, T)
        return np.transpose(cols, (1, 0, 2))


def context_vector(states, alpha) -> np.ndarray:
    """Attention read-out: sum_s alpha[s] * states[s]."""
    states = np.asarray(states, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape[0] != states.shape[0]:
        raise ValueError("one weight per encoder state")
    if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > 1e-6:
        raise ValueError(f"attention weights must be a probability vector (sum={alpha.sum():.9g})")
    return np.tensordot(alpha, states, axes=(0, 0))


class Generator:
    fuse_parts = True

    def __init__(self, config: GeneratorConfig | None = None, partition: PartitionSpec = DEFAULT_PARTITION,
                 seed: int = 0, init: str = "uniform", params: ParamStore | None = None):
        self.partition = partition
        self.config = (config or GeneratorConfig()).resolve(partition.n_parts)
        if params is None:
            params = ParamStore(seed, init)
            self._build(params)
        self.params = params

    @property
    def hidden(self) -> int:
        return self.config.dec_hidden

    def _build(self, store: ParamStore) -> None:
        cfg = self.config
        if cfg.use_parts:
            for p, dim in enumerate(self.partition.dims()):
                add_lstm(store, f"enc.{self.partition.names[p]}", dim, cfg.part_hidden)
        else:
            add_lstm(store, "enc.body", POSE_DIM, cfg.dec_hidden)
        if cfg.use_attention:
            store.weight("att.W", (2 * cfg.dec_hidden, cfg.attn_hidden))
            store.weight("att.V", (cfg.attn_hidden, 1))
        add_affine(store, "init_h", cfg.dec_hidden, cfg.dec_hidden)
        add_affine(store, "init_c", cfg.dec_hidden, cfg.dec_hidden)
        n_in = POSE_DIM + cfg.dec_hidden + (cfg.dec_hidden if cfg.use_attention else 0)
        n_out = 4 * cfg.dec_hidden + (POSE_DIM if cfg.tanh_pose else 0)
        store.weight("dec.W", (n_in, n_out))
        store.bias("dec.b", (n_out,))
        add_affine(store, "out", POSE_DIM if cfg.tanh_pose else cfg.dec_hidden, POSE_DIM)

    # ------------------------------------------------------------------ graph

    def encode_graph(self, motion_a: np.ndarray) -> list[Node]:
        """Per-frame encoder states h_1..h_S, each ``(B, H_dec)``."""
        motion_a = np.asarray(motion_a, dtype=np.float64)
        S = motion_a.shape[1]
        if S < 2:
            raise ValueError("need at least 2 frames")
        if not self.config.use_parts:
            states = run_lstm([motion_a[:, s] for s in range(S)], self.params, "enc.body")
            return [st.h for st in states]
        if len(set(self.partition.dims())) == 1 and self.fuse_parts:
            # equal-width parts: run all part LSTMs as one group
            x = np.stack([motion_a[:, :, self.partition.coords(p)] for p in range(self.partition.n_parts)])
            states = run_lstm_group([x[:, :, s] for s in range(S)], self.params,
                                    [f"enc.{name}" for name in self.partition.names])
            return [merge_groups(st.h) for st in states]
        per_part = []
        for p in range(self.partition.n_parts):
            x = motion_a[:, :, self.partition.coords(p)]
            states = run_lstm([x[:, s] for s in range(S)], self.params, f"enc.{self.partition.names[p]}")
            per_part.append([st.h for st in states])
        return [concat([part[s] for part in per_part], axis=-1) for s in range(S)]

    def _attention(self, keys: Node, values: Node, h_prev: Node, Wq: Node, V: Node) -> tuple[Node, Node]:
        scores = tanh(keys + h_prev @ Wq) @ V                # (S, B, 1)
        alpha = softmax(scores, axis=0)
        return alpha, sum_(alpha * values, axis=0)

    def _decode(self, prev_pose, h_prev: Node, c_prev: Node, r: Node | None,
                W: Node, b: Node) -> tuple[Node, GateState]:
        parts = [prev_pose, h_prev] + ([r] if r is not None else [])
        z = concat(parts, axis=-1) @ W + b
        state = lstm_gates(z, c_prev, self.hidden)
        if self.config.tanh_pose:
            pose = affine(tanh(z[..., 4 * self.hidden:]), self.params, "out")
        else:
            pose = affine(state.h, self.params, "out")
        return pose, state

    def forward(self, motion_a, teacher=None, teacher_ratio: float = 0.0, rng=None) -> SynthesisGraph:
        """Synthesize ``(B, S, 45)`` B-motions; T = S.

        With ``teacher_ratio > 0`` each step feeds the ground-truth previous
        pose from ``teacher`` with that probability instead of the model's own.
        """
        motion_a = np.asarray(motion_a, dtype=np.float64)
        batch, S = motion_a.shape[:2]
        enc = self.encode_graph(motion_a)
        h = affine(enc[-1], self.params, "init_h")
        c = affine(enc[-1], self.params, "init_c")
        W, b = self.params.node("dec.W"), self.params.node("dec.b")
        attention = None
        if self.config.use_attention:
            values = stack(enc, axis=0)                      # (S, B, H)
            att_W = self.params.node("att.W")
            keys = values @ att_W[:self.hidden]              # W applied to the h_s half of [h_s; h_prev]
            Wq, V = att_W[self.hidden:], self.params.node("att.V")
            attention = []
        prev = constant(np.zeros((batch, POSE_DIM)))
        poses, states = [], []
        for t in range(S):
            r = None
            if attention is not None:
                alpha, r = self._attention(keys, values, h, Wq, V)
                attention.append(alpha)
            pose, state = self._decode(prev, h, c, r, W, b)
            poses.append(pose)
            states.append(state)
            h, c = state.h, state.c
            if teacher is not None and teacher_ratio > 0 and rng is not None and rng.random() < teacher_ratio:
                prev = constant(np.asarray(teacher)[:, t])
            else:
                prev = pose
        return SynthesisGraph(poses, stack(poses, axis=1), attention, states)

    # ------------------------------------------------------------------ arrays

    def encode(self, motion_a) -> np.ndarray:
        """``(S, 45)`` -> ``(S, H_dec)`` encoder states."""
        with self.params.frozen():
            enc = self.encode_graph(np.asarray(motion_a)[None])
        return np.stack([h.value[0] for h in enc])

    def attention_scores(self, states, h_prev) -> np.ndarray:
        """Attention column over encoder ``states (S, H)`` given decoder state ``h_prev (H,)``."""
        if not self.config.use_attention:
            raise ValueError("attention is disabled in this generator")
        states = np.asarray(states, dtype=np.float64)
        if len(states) == 0:
            raise ValueError("no encoder states")
        with self.params.frozen():
            values = constant(states[:, None, :])
            att_W = self.params.node("att.W")
            alpha, _ = self._attention(values @ att_W[:self.hidden], values,
                                       constant(np.asarray(h_prev, dtype=np.float64)[None]),
                                       att_W[self.hidden:], self.params.node("att.V"))
        return alpha.value[:, 0, 0]

    def initial_state(self, motion_a) -> tuple[np.ndarray, np.ndarray]:
        last = self.encode(motion_a)[-1]
        return (last @ self.params["init_h.W"] + self.params["init_h.b"],
                last @ self.params["init_c.W"] + self.params["init_c.b"])

    def decode_step(self, prev_pose, prev_h, prev_c, r=None) -> tuple[np.ndarray, GateState]:
        """One decoder step on single vectors; returns the pose and the gate values (arrays)."""
        with self.params.frozen():
            pose, state = self._decode(
                constant(np.asarray(prev_pose, dtype=np.float64)[None]),
                constant(np.asarray(prev_h, dtype=np.float64)[None]),
                constant(np.asarray(prev_c, dtype=np.float64)[None]),
                None if r is None else constant(np.asarray(r, dtype=np.float64)[None]),
                self.params.node("dec.W"), self.params.node("dec.b"))
        gates = GateState(*(getattr(state, k).value[0] for k in ("i", "f", "o", "u", "c", "h")))
        return pose.value[0], gates

    def synthesize_batch(self, motion_a) -> tuple[np.ndarray, np.ndarray | None]:
        with self.params.frozen():
            graph = self.forward(motion_a)
        return graph.motion.value.copy(), graph.attention_maps()

    def synthesize(self, motion_a) -> tuple[np.ndarray, AttentionMap | None]:
        """``(S, 45)`` A-motion -> ``(S, 45)`` B-motion and its S x T attention map."""
        motion, maps = self.synthesize_batch(np.asarray(motion_a)[None])
        return motion[0], None if maps is None else AttentionMap(maps[0])
