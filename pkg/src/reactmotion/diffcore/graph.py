"""Define-by-run reverse-mode differentiation over dense float64 arrays.

Every operation eagerly computes its value and records its inputs, so a
finished forward pass *is* the graph.  ``gradients`` walks it backwards;
``evaluate`` replays it with new leaf bindings.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

LOG_FLOOR = 1e-12


class Op(str, Enum):
    LEAF = "leaf"
    MATMUL = "matmul"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    CONCAT = "concat"
    STACK = "stack"
    SLICE = "slice"
    RESHAPE = "reshape"
    TRANSPOSE = "transpose"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"
    LOG = "log"
    EXP = "exp"
    SQUARE = "square"
    SQRT = "sqrt"
    ABS = "abs"
    MAXIMUM = "maximum"
    SUM = "sum"
    MEAN = "mean"


class GraphError(ValueError):
    """Raised for malformed graphs: shape mismatches, unbound inputs, bad outputs."""


class Node:
    """One value in the computation graph.

    ``kind`` distinguishes leaves: ``"const"`` (never differentiated),
    ``"param"`` (gradients reported by name) and ``"input"`` (must be bound
    before ``evaluate``).
    """

    __slots__ = ("op", "inputs", "attrs", "value", "grad", "name", "kind", "requires_grad")
    __array_priority__ = 100  # make ndarray <op> Node dispatch to Node

    def __init__(self, op, inputs=(), attrs=None, value=None, name=None, kind=None,
                 requires_grad=False):
        self.op = op
        self.inputs = tuple(inputs)
        self.attrs = attrs or {}
        self.value = value
        self.grad = None
        self.name = name
        self.kind = kind
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        shape = None if self.value is None else self.value.shape
        return f"<Node {self.op.value}{label} shape={shape}>"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, index):
        return slice_(self, index)


# ---------------------------------------------------------------------------
# leaves

def constant(value, name=None) -> Node:
    return Node(Op.LEAF, value=np.asarray(value, dtype=np.float64), name=name, kind="const")


def param(value, name) -> Node:
    """A trainable leaf; ``value`` is referenced, not copied."""
    return Node(Op.LEAF, value=value, name=name, kind="param", requires_grad=True)


def placeholder(name, value=None) -> Node:
    """An input leaf that ``evaluate`` rebinds by name."""
    if value is not None:
        value = np.asarray(value, dtype=np.float64)
    return Node(Op.LEAF, value=value, name=name, kind="input")


def as_node(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


# ---------------------------------------------------------------------------
# forward / backward rules

def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _swap(a):
    return np.swapaxes(a, -1, -2)


def _fwd_matmul(xs, at):
    if xs[0].ndim < 2 or xs[1].ndim < 2:
        raise ValueError("matmul operands must be at least 2-D")
    return np.matmul(xs[0], xs[1])


def _bwd_matmul(g, node, needs):
    a, b = (x.value for x in node.inputs)
    ga = _unbroadcast(np.matmul(g, _swap(b)), a.shape) if needs[0] else None
    gb = _unbroadcast(np.matmul(_swap(a), g), b.shape) if needs[1] else None
    return ga, gb


def _bwd_add(g, node, needs):
    a, b = node.inputs
    return (_unbroadcast(g, a.value.shape) if needs[0] else None,
            _unbroadcast(g, b.value.shape) if needs[1] else None)


def _bwd_sub(g, node, needs):
    a, b = node.inputs
    return (_unbroadcast(g, a.value.shape) if needs[0] else None,
            _unbroadcast(-g, b.value.shape) if needs[1] else None)


def _bwd_mul(g, node, needs):
    a, b = node.inputs
    return (_unbroadcast(g * b.value, a.value.shape) if needs[0] else None,
            _unbroadcast(g * a.value, b.value.shape) if needs[1] else None)


def _fwd_concat(xs, at):
    return np.concatenate(xs, axis=at["axis"])


def _bwd_concat(g, node, needs):
    axis = node.attrs["axis"]
    bounds = np.cumsum([x.value.shape[axis] for x in node.inputs])[:-1]
    return np.split(g, bounds, axis=axis)


def _fwd_stack(xs, at):
    return np.stack(xs, axis=at["axis"])


def _bwd_stack(g, node, needs):
    axis = node.attrs["axis"]
    return [np.take(g, i, axis=axis) if need else None for i, need in enumerate(needs)]


def _fwd_slice(xs, at):
    return xs[0][at["index"]]


def _bwd_slice(g, node, needs):
    full = np.zeros_like(node.inputs[0].value)
    if node.attrs["fancy"]:
        np.add.at(full, node.attrs["index"], g)  # repeated indices accumulate
    else:
        full[node.attrs["index"]] += g
    return (full,)


def _fwd_reshape(xs, at):
    return np.reshape(xs[0], at["shape"])


def _bwd_reshape(g, node, needs):
    return (np.reshape(g, node.inputs[0].value.shape),)


def _bwd_transpose(g, node, needs):
    return (np.transpose(g, np.argsort(node.attrs["axes"])),)


def _sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(x, axis):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=axis, keepdims=True)


def _bwd_softmax(g, node, needs):
    y = node.value
    axis = node.attrs["axis"]
    return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)


def _fwd_reduce(fn):
    def forward(xs, at):
        return fn(xs[0], axis=at["axis"], keepdims=at["keepdims"])
    return forward


def _bwd_sum(g, node, needs):
    x = node.inputs[0].value
    axis, keepdims = node.attrs["axis"], node.attrs["keepdims"]
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, x.shape).copy(),)


def _bwd_mean(g, node, needs):
    x = node.inputs[0].value
    axis = node.attrs["axis"]
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[a] for a in axes]))
    (full,) = _bwd_sum(g, node, needs)
    return (full / count,)


def _bwd_maximum(g, node, needs):
    x = node.inputs[0].value
    return (g * (x > node.attrs["floor"]),)


_RULES: dict[Op, tuple[Callable, Callable]] = {
    Op.MATMUL: (_fwd_matmul, _bwd_matmul),
    Op.ADD: (lambda xs, at: xs[0] + xs[1], _bwd_add),
    Op.SUB: (lambda xs, at: xs[0] - xs[1], _bwd_sub),
    Op.MUL: (lambda xs, at: xs[0] * xs[1], _bwd_mul),
    Op.CONCAT: (_fwd_concat, _bwd_concat),
    Op.STACK: (_fwd_stack, _bwd_stack),
    Op.SLICE: (_fwd_slice, _bwd_slice),
    Op.RESHAPE: (_fwd_reshape, _bwd_reshape),
    Op.TRANSPOSE: (lambda xs, at: np.transpose(xs[0], at["axes"]), _bwd_transpose),
    Op.SIGMOID: (lambda xs, at: _sigmoid(xs[0]),
                 lambda g, n, needs: (g * n.value * (1.0 - n.value),)),
    Op.TANH: (lambda xs, at: np.tanh(xs[0]),
              lambda g, n, needs: (g * (1.0 - n.value * n.value),)),
    Op.SOFTMAX: (lambda xs, at: _softmax(xs[0], at["axis"]), _bwd_softmax),
    Op.LOG: (lambda xs, at: np.log(xs[0]),
             lambda g, n, needs: (g / n.inputs[0].value,)),
    Op.EXP: (lambda xs, at: np.exp(xs[0]),
             lambda g, n, needs: (g * n.value,)),
    Op.SQUARE: (lambda xs, at: xs[0] * xs[0],
                lambda g, n, needs: (2.0 * g * n.inputs[0].value,)),
    Op.SQRT: (lambda xs, at: np.sqrt(xs[0]),
              lambda g, n, needs: (0.5 * g / n.value,)),
    Op.ABS: (lambda xs, at: np.abs(xs[0]),
             lambda g, n, needs: (g * np.sign(n.inputs[0].value),)),
    Op.MAXIMUM: (lambda xs, at: np.maximum(xs[0], at["floor"]), _bwd_maximum),
    Op.SUM: (_fwd_reduce(np.sum), _bwd_sum),
    Op.MEAN: (_fwd_reduce(np.mean), _bwd_mean),
}


def _apply(op: Op, inputs: Sequence, **attrs) -> Node:
    nodes = [as_node(x) for x in inputs]
    forward = _RULES[op][0]
    try:
        value = forward([n.value for n in nodes], attrs)
    except (ValueError, IndexError) as exc:
        shapes = [n.value.shape for n in nodes]
        raise GraphError(f"{op.value} node: incompatible input shapes {shapes}: {exc}") from None
    return Node(op, nodes, attrs, np.asarray(value, dtype=np.float64),
                requires_grad=any(n.requires_grad for n in nodes))


# ---------------------------------------------------------------------------
# public operations

def matmul(a, b) -> Node:
    return _apply(Op.MATMUL, (a, b))


def add(a, b) -> Node:
    return _apply(Op.ADD, (a, b))


def sub(a, b) -> Node:
    return _apply(Op.SUB, (a, b))


def mul(a, b) -> Node:
    return _apply(Op.MUL, (a, b))


def concat(xs: Iterable, axis: int = -1) -> Node:
    return _apply(Op.CONCAT, tuple(xs), axis=axis)


def stack(xs: Iterable, axis: int = 0) -> Node:
    return _apply(Op.STACK, tuple(xs), axis=axis)


def slice_(x, index) -> Node:
    fancy = any(isinstance(i, (list, np.ndarray)) for i in (index if isinstance(index, tuple) else (index,)))
    return _apply(Op.SLICE, (x,), index=index, fancy=fancy)


def reshape(x, shape) -> Node:
    return _apply(Op.RESHAPE, (x,), shape=tuple(shape))


def transpose(x, axes) -> Node:
    return _apply(Op.TRANSPOSE, (x,), axes=tuple(axes))


def sigmoid(x) -> Node:
    return _apply(Op.SIGMOID, (x,))


def tanh(x) -> Node:
    return _apply(Op.TANH, (x,))


def softmax(x, axis: int = -1) -> Node:
    return _apply(Op.SOFTMAX, (x,), axis=axis)


def log(x) -> Node:
    return _apply(Op.LOG, (x,))


def safe_log(x, floor: float = LOG_FLOOR) -> Node:
    """``log(max(x, floor))``; keeps adversarial terms finite."""
    return log(maximum(x, floor))


def exp(x) -> Node:
    return _apply(Op.EXP, (x,))


def square(x) -> Node:
    return _apply(Op.SQUARE, (x,))


def sqrt(x) -> Node:
    return _apply(Op.SQRT, (x,))


def abs_(x) -> Node:
    return _apply(Op.ABS, (x,))


def maximum(x, floor: float) -> Node:
    return _apply(Op.MAXIMUM, (x,), floor=float(floor))


def sum_(x, axis=None, keepdims: bool = False) -> Node:
    return _apply(Op.SUM, (x,), axis=axis, keepdims=keepdims)


def mean(x, axis=None, keepdims: bool = False) -> Node:
    return _apply(Op.MEAN, (x,), axis=axis, keepdims=keepdims)


# ---------------------------------------------------------------------------
# traversal

def topological_order(output: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack_ = [(output, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for inp in node.inputs:
            if id(inp) not in seen:
                stack_.append((inp, False))
    return order


def evaluate(output: Node, bindings: Mapping | None = None) -> np.ndarray:
    """Recompute ``output`` after rebinding input leaves.

    ``bindings`` maps a leaf's name (or the leaf node itself) to its new
    array.  Unbound ``input`` leaves are an error.
    """
    bindings = bindings or {}
    for node in topological_order(output):
        if node.op is Op.LEAF:
            if node in bindings or node.name in bindings:
                key = node if node in bindings else node.name
                node.value = np.asarray(bindings[key], dtype=np.float64)
            elif node.value is None:
                raise GraphError(f"input leaf {node.name!r} is unbound")
            continue
        forward = _RULES[node.op][0]
        try:
            node.value = np.asarray(forward([x.value for x in node.inputs], node.attrs), dtype=np.float64)
        except (ValueError, IndexError) as exc:
            shapes = [x.value.shape for x in node.inputs]
            raise GraphError(f"{node.op.value} node: incompatible input shapes {shapes}: {exc}") from None
    return output.value.copy()


def backward(output: Node) -> list[Node]:
    """Populate ``.grad`` on every node reachable from scalar ``output``."""
    if output.value is None or output.value.size != 1:
        shape = None if output.value is None else output.value.shape
        raise GraphError(f"gradients need a scalar output, got shape {shape}")
    order = topological_order(output)
    for node in order:
        node.grad = None
    output.grad = np.ones_like(output.value)
    for node in reversed(order):
        if node.grad is None or node.op is Op.LEAF or not node.requires_grad:
            continue
        needs = [x.requires_grad for x in node.inputs]
        grads = _RULES[node.op][1](node.grad, node, needs)
        for inp, need, g in zip(node.inputs, needs, grads):
            if not need or g is None:
                continue
            inp.grad = g if inp.grad is None else inp.grad + g
    return order


def gradients(output: Node, params=None) -> dict[str, np.ndarray]:
    """d(output)/d(param) for every param leaf, summed over repeated uses.

    When ``params`` (a ``ParamStore`` or name->array mapping) is given the
    result covers all of its names; unreachable ones get zeros.
    """
    order = backward(output)
    grads: dict[str, np.ndarray] = {}
    for node in order:
        if node.kind == "param" and node.grad is not None:
            if node.name in grads:
                grads[node.name] = grads[node.name] + node.grad
            else:
                grads[node.name] = np.array(node.grad, dtype=np.float64)
    if params is None:
        return grads
    full = {}
    for name, value in params.items():
        full[name] = grads.get(name, np.zeros_like(value))
    return full
