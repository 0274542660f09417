"""Multi-index dictionaries."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from math import comb

import numpy as np


@dataclass(frozen=True)
class MultiIndexSet:
    """Ordered set of d-dimensional multi-indices.

    ``indices`` is an ``(N, d)`` integer array in graded lexicographic order:
    by total degree, then with earlier coordinates larger first.
    """

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 2:
            raise ValueError("indices must be a 2-d array")
        if np.any(idx < 0):
            raise ValueError("multi-indices must be nonnegative")
        if len({tuple(r) for r in idx}) != len(idx):
            raise ValueError("duplicate multi-indices")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def d(self) -> int:
        return self.indices.shape[1]

    @property
    def N(self) -> int:
        return self.indices.shape[0]

    @property
    def n(self) -> int:
        """Maximum univariate degree."""
        return int(self.indices.max()) if self.N else 0

    def __len__(self) -> int:
        return self.N

    def __contains__(self, item) -> bool:
        t = tuple(int(v) for v in item)
        return any(tuple(r) == t for r in self.indices)

    def position(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in r): i for i, r in enumerate(self.indices)}

    def to_json(self) -> str:
        return json.dumps(self.indices.tolist())

    @classmethod
    def from_json(cls, text: str) -> "MultiIndexSet":
        return cls(np.array(json.loads(text), dtype=np.int64))


def _compositions(total: int, parts: int):
    """Nonnegative compositions of ``total`` with the first part largest first."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def total_degree(d: int, n: int) -> MultiIndexSet:
    """All multi-indices with ``|i|_1 <= n``; cardinality C(d+n, d)."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    size = comb(d + n, d)
    if size > sys.maxsize:
        raise OverflowError(f"total-degree set has C({d + n},{d}) = {size} elements")
    out = np.empty((size, d), dtype=np.int64)
    row = 0
    for k in range(n + 1):
        for c in _compositions(k, d):
            out[row] = c
            row += 1
    return MultiIndexSet(out)
