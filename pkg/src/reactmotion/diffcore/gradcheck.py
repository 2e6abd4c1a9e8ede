from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .graph import Node, gradients
from .params import ParamStore


class GradCheckResult(NamedTuple):
    max_rel_error: float
    n_checked: int
    worst: tuple[str, tuple[int, ...]] | None

    def ok(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def _scalar(loss: Node) -> float:
    value = float(np.asarray(loss.value).reshape(-1)[0])
    if not np.isfinite(value):
        raise FloatingPointError(f"loss is not finite: {value}")
    return value


def grad_check(loss_builder: Callable[[ParamStore], Node], params: ParamStore,
               step: float = 1e-5, n_samples: int | None = 200,
               seed: int = 0) -> GradCheckResult:
    """Compare analytic gradients with central differences.

    ``loss_builder`` must rebuild the scalar loss from ``params`` on every
    call.  Entries are sampled uniformly over all parameters (all of them when
    ``n_samples`` is None or exceeds the parameter count).  The error for one
    entry is |a - d| / max(|a|, |d|, 1e-8).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    loss = loss_builder(params)
    _scalar(loss)
    analytic = gradients(loss, params)

    entries = [(name, idx) for name in params.names() for idx in np.ndindex(params[name].shape)]
    if not entries:
        return GradCheckResult(0.0, 0, None)
    if n_samples is not None and n_samples < len(entries):
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(entries), size=n_samples, replace=False)
        entries = [entries[i] for i in sorted(picks)]

    worst, max_err = None, 0.0
    for name, idx in entries:
        arr = params[name]
        original = arr[idx]
        arr[idx] = original + step
        plus = _scalar(loss_builder(params))
        arr[idx] = original - step
        minus = _scalar(loss_builder(params))
        arr[idx] = original
        numeric = (plus - minus) / (2.0 * step)
        a = float(analytic[name][idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        if err > max_err or worst is None:
            max_err, worst = max(err, max_err), (name, idx)
    return GradCheckResult(max_err, len(entries), worst)
