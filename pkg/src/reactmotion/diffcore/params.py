from __future__ import annotations

import contextlib
from typing import Iterator

import numpy as np

from .graph import Node, constant, param


class ParamStore:
    """Named trainable arrays with deterministic insertion order.

    ``init`` controls how new arrays are filled: ``"uniform"`` draws weights
    from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) using the store's seeded stream,
    ``"zeros"`` leaves everything at zero.  Biases always start at zero.
    """

    def __init__(self, seed: int = 0, init: str = "uniform"):
        if init not in ("uniform", "zeros"):
            raise ValueError(f"unknown init scheme {init!r}")
        self.seed = int(seed)
        self.init = init
        self._rng = np.random.default_rng(self.seed)
        self._arrays: dict[str, np.ndarray] = {}
        self._frozen = False

    def weight(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> np.ndarray:
        if fan_in is None:
            fan_in = shape[0]
        if self.init == "zeros":
            value = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(fan_in)
            value = self._rng.uniform(-bound, bound, size=shape)
        return self.add(name, value)

    def bias(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        return self.add(name, np.zeros(shape))

    def add(self, name: str, value) -> np.ndarray:
        if name in self._arrays:
            raise KeyError(f"parameter {name!r} already exists")
        self._arrays[name] = np.array(value, dtype=np.float64)
        return self._arrays[name]

    def node(self, name: str) -> Node:
        """Leaf for the current graph; constant while the store is frozen."""
        if self._frozen:
            return constant(self._arrays[name], name=name)
        return param(self._arrays[name], name)

    @contextlib.contextmanager
    def frozen(self) -> Iterator["ParamStore"]:
        previous, self._frozen = self._frozen, True
        try:
            yield self
        finally:
            self._frozen = previous

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value) -> None:
        value = np.asarray(value, dtype=np.float64)
        if name in self._arrays and self._arrays[name].shape != value.shape:
            raise ValueError(f"shape mismatch for {name!r}: {self._arrays[name].shape} vs {value.shape}")
        self._arrays[name] = value.copy()

    def __contains__(self, name) -> bool:
        return name in self._arrays

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def size(self) -> int:
        return int(sum(a.size for a in self._arrays.values()))

    @classmethod
    def union(cls, *stores: "ParamStore") -> "ParamStore":
        """Store whose entries are the (shared, not copied) arrays of ``stores``."""
        out = cls()
        for store in stores:
            for name, value in store.items():
                if name in out._arrays:
                    raise KeyError(f"parameter {name!r} appears in more than one store")
                out._arrays[name] = value
        return out

    def copy(self) -> "ParamStore":
        out = ParamStore(self.seed, self.init)
        for name, value in self._arrays.items():
            out._arrays[name] = value.copy()
        return out

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self._arrays.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._arrays) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name in self._arrays:
            self[name] = state[name]
