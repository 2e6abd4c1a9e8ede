"""LSTM and affine blocks expressed in diffcore primitives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import Node, ParamStore, as_node, concat, constant, reshape, sigmoid, stack, tanh, transpose


@dataclass
class GateState:
    i: Node
    f: Node
    o: Node
    u: Node
    c: Node
    h: Node


def add_lstm(store: ParamStore, prefix: str, n_in: int, hidden: int) -> None:
    """One weight block mapping [x; h] to the stacked (i, f, o, u) pre-activations."""
    store.weight(f"{prefix}.W", (n_in + hidden, 4 * hidden), fan_in=n_in + hidden)
    store.bias(f"{prefix}.b", (4 * hidden,))


def add_affine(store: ParamStore, prefix: str, n_in: int, n_out: int) -> None:
    store.weight(f"{prefix}.W", (n_in, n_out), fan_in=n_in)
    store.bias(f"{prefix}.b", (n_out,))


def zero_state(batch: int, hidden: int) -> tuple[Node, Node]:
    return constant(np.zeros((batch, hidden))), constant(np.zeros((batch, hidden)))


def lstm_gates(z: Node, c_prev, hidden: int) -> GateState:
    """Gate activations and state update from stacked (i, f, o, u) pre-activations."""
    i = sigmoid(z[..., :hidden])
    f = sigmoid(z[..., hidden:2 * hidden])
    o = sigmoid(z[..., 2 * hidden:3 * hidden])
    u = tanh(z[..., 3 * hidden:4 * hidden])
    c = f * c_prev + i * u
    h = o * tanh(c)
    return GateState(i, f, o, u, c, h)


def lstm_step(x, h_prev, c_prev, W: Node, b: Node) -> GateState:
    z = concat([as_node(x), h_prev], axis=-1) @ W + b
    return lstm_gates(z, c_prev, W.value.shape[-1] // 4)


def run_lstm(inputs, store: ParamStore, prefix: str, reverse: bool = False,
             h0: Node | None = None, c0: Node | None = None) -> list[GateState]:
    """Unroll over ``inputs`` (a sequence of per-step ``(B, d)`` arrays or nodes).

    With ``reverse`` the steps run last-to-first; the returned states stay in
    processing order, so ``states[-1]`` is the state after the final step read.
    """
    W, b = store.node(f"{prefix}.W"), store.node(f"{prefix}.b")
    hidden = W.value.shape[1] // 4
    batch = np.shape(inputs[0].value if isinstance(inputs[0], Node) else inputs[0])[0]
    h, c = zero_state(batch, hidden)
    if h0 is not None:
        h, c = h0, c0
    steps = reversed(range(len(inputs))) if reverse else range(len(inputs))
    states = []
    for t in steps:
        state = lstm_step(inputs[t], h, c, W, b)
        h, c = state.h, state.c
        states.append(state)
    return states


def run_lstm_group(inputs, store: ParamStore, prefixes) -> list[GateState]:
    """Unroll several same-shaped LSTMs side by side.

    Each step's input is ``(G, B, d)`` with group g fed to the block named
    ``prefixes[g]``; weights are stacked along the leading axis so the whole
    group costs one batched matmul per step.  States come back as ``(G, B, H)``.
    """
    W = stack([store.node(f"{p}.W") for p in prefixes], axis=0)
    b = stack([store.node(f"{p}.b") for p in prefixes], axis=0)[:, None, :]
    hidden = W.value.shape[-1] // 4
    first = inputs[0].value if isinstance(inputs[0], Node) else np.asarray(inputs[0])
    zeros = np.zeros((len(prefixes), first.shape[1], hidden))
    h, c = constant(zeros), constant(zeros)
    states = []
    for x in inputs:
        state = lstm_step(x, h, c, W, b)
        h, c = state.h, state.c
        states.append(state)
    return states


def merge_groups(h: Node) -> Node:
    """``(G, B, H)`` -> ``(B, G*H)``, groups concatenated in order."""
    G, B, H = h.value.shape
    return reshape(transpose(h, (1, 0, 2)), (B, G * H))


def affine(x, store: ParamStore, prefix: str) -> Node:
    return as_node(x) @ store.node(f"{prefix}.W") + store.node(f"{prefix}.b")
