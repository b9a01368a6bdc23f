"""
CoeffField: a scalar, vector or matrix of expressions in (x, y).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .evaluate import compile_node
from .exceptions import ExprDomainError, ExprError
from .nodes import to_source, variables
from .parser import parse


@dataclass(frozen=True)
class CoeffField:
    shape: tuple
    entries: tuple            # row-major expression trees
    dims: tuple               # (n, m)
    _compiled: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.entries) != int(np.prod(self.shape, dtype=int)):
            raise ValueError(
                f"{len(self.entries)} entries do not fill shape {self.shape}"
            )
        object.__setattr__(self, '_compiled', tuple(compile_node(e) for e in self.entries))

    @classmethod
    def parse(cls, sources, dims, params: Mapping | None = None, shape=None):
        """
        Build a field from a string (scalar), a list of strings (vector)
        or a list of lists of strings (matrix). Parse errors are re-raised
        with the entry index prefixed to the message.
        """
        if isinstance(sources, str):
            flat, inferred = [sources], ()
        elif sources and all(isinstance(s, str) for s in sources):
            flat, inferred = list(sources), (len(sources),)
        else:
            rows = [list(r) for r in sources]
            width = len(rows[0]) if rows else 0
            if any(len(r) != width for r in rows):
                raise ValueError("matrix rows must have equal length")
            flat, inferred = [s for r in rows for s in r], (len(rows), width)
        shape = tuple(shape) if shape is not None else inferred
        entries = []
        for idx, source in enumerate(flat):
            try:
                entries.append(parse(str(source), dims, params))
            except ExprError as exc:
                exc.entry = np.unravel_index(idx, shape) if shape else ()
                raise
        return cls(shape=shape, entries=tuple(entries), dims=tuple(dims))

    @property
    def uses_x(self) -> bool:
        return any(kind == 'x' for e in self.entries for kind, _ in variables(e))

    @property
    def uses_y(self) -> bool:
        return any(kind == 'y' for e in self.entries for kind, _ in variables(e))

    def to_source(self):
        texts = [to_source(e) for e in self.entries]
        if not self.shape:
            return texts[0]
        if len(self.shape) == 1:
            return texts
        rows, cols = self.shape
        return [texts[r * cols:(r + 1) * cols] for r in range(rows)]

    def __call__(self, x, y):
        return evaluate(self, x, y)


def _as_state(values, dim, name):
    arr = np.asarray(values, dtype=float)
    if dim == 0 and arr.size == 0:
        return arr.reshape((0,) + arr.shape[1:])
    if arr.ndim == 0 or arr.shape[0] != dim:
        raise ValueError(f"{name} must have leading dimension {dim}, got shape {arr.shape}")
    return arr


def evaluate(coeff: CoeffField, x, y):
    """
    Evaluate every entry at x (shape (n, *batch)) and y (shape (m, *batch)).
    The result has shape coeff.shape + batch.
    """
    n, m = coeff.dims
    x = _as_state(x, n, 'x')
    y = _as_state(np.zeros(0) if y is None else y, m, 'y')
    batch = np.broadcast_shapes(x.shape[1:], y.shape[1:])
    out = np.empty(coeff.shape + batch)
    flat = out.reshape((-1,) + batch)
    for idx, fn in enumerate(coeff._compiled):
        try:
            flat[idx] = fn(x, y)
        except ExprDomainError as exc:
            entry = tuple(int(i) for i in np.unravel_index(idx, coeff.shape)) if coeff.shape else ()
            raise exc.at_entry(entry) from None
    return out
