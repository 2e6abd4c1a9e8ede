"""Minimal reverse-mode differentiation kernel used by every network here."""

from .graph import (
    LOG_FLOOR,
    GraphError,
    Node,
    Op,
    abs_,
    add,
    as_node,
    backward,
    concat,
    constant,
    evaluate,
    exp,
    gradients,
    log,
    matmul,
    maximum,
    mean,
    mul,
    param,
    placeholder,
    reshape,
    safe_log,
    sigmoid,
    slice_,
    softmax,
    sqrt,
    square,
    stack,
    sub,
    sum_,
    tanh,
    topological_order,
    transpose,
)
from .gradcheck import GradCheckResult, grad_check
from .optim import NonFiniteGradient, OptimizerState, clip_by_global_norm, global_norm, rmsprop_step
from .params import ParamStore
