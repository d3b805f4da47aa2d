"""Discretization of responses and auxiliary variables into slices.

Slice labels are 1-based: a ``SliceAssignment`` with ``H`` slices uses the
labels ``1..H`` and every slice holds at least one observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, SliceTooSmall, TooManySlices

MIN_COV_SLICE = 2


@dataclass(frozen=True)
class SliceAssignment:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidInput("labels must be a nonempty vector")
        h = int(labels.max())
        if labels.min() < 1 or np.bincount(labels, minlength=h + 1)[1:].min() < 1:
            raise InvalidInput("labels must cover 1..H with no empty slice")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def H(self) -> int:
        return int(self.labels.max())

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.H + 1)[1:]

    def members(self, h: int) -> np.ndarray:
        """Row indices of slice ``h`` (1-based)."""
        return np.flatnonzero(self.labels == h)

    def require_min_size(self, size: int = MIN_COV_SLICE) -> None:
        small = np.flatnonzero(self.counts < size)
        if small.size:
            raise SliceTooSmall(
                f"slice {small[0] + 1} has {self.counts[small[0]]} observations, need {size}"
            )


def _renumber(keys: np.ndarray) -> SliceAssignment:
    _, inv = np.unique(keys, return_inverse=True, axis=0 if keys.ndim > 1 else None)
    return SliceAssignment(inv.ravel() + 1)


def slice_discrete(v) -> SliceAssignment:
    """One slice per distinct value, slices ordered by ascending value."""
    v = np.asarray(v)
    if v.size == 0:
        raise InvalidInput("cannot slice an empty vector")
    return _renumber(v.ravel())


def slice_continuous(v, H: int) -> SliceAssignment:
    """Equal-frequency slicing into at most ``H`` slices.

    Cut points sit at ranks ``floor(n*h/H)`` of the sorted values.  A cut that
    would split a block of tied values is moved forward past the block, so
    ties always share a slice and fewer than ``H`` slices may result.
    """
    v = np.asarray(v, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise InvalidInput("cannot slice an empty vector")
    if H < 1:
        raise InvalidInput("H must be at least 1")
    if H > n:
        raise TooManySlices(f"H={H} exceeds n={n}")
    order = np.argsort(v, kind="stable")
    vs = v[order]
    cuts = []
    prev = 0
    for h in range(1, H):
        b = max(n * h // H, prev)
        while 0 < b < n and vs[b] == vs[b - 1]:
            b += 1
        cuts.append(b)
        prev = b
    sorted_labels = np.searchsorted(np.asarray(cuts), np.arange(n), side="right")
    labels = np.empty(n, dtype=int)
    labels[order] = sorted_labels
    return _renumber(labels)


def cross_slices(a: SliceAssignment, b: SliceAssignment) -> SliceAssignment:
    """Cross-classify two slicings; empty cells are dropped and the rest renumbered."""
    if a.n != b.n:
        raise InvalidInput(f"length mismatch: {a.n} vs {b.n}")
    return _renumber(np.column_stack([a.labels, b.labels]))


def slice_columns(w, H) -> SliceAssignment:
    """Slice each column of ``w`` into ``H`` slices and cross-classify the results.

    ``H=None`` treats the columns as discrete.
    """
    w = np.asarray(w)
    if w.ndim == 1:
        w = w[:, None]
    out = None
    for j in range(w.shape[1]):
        s = slice_discrete(w[:, j]) if H is None else slice_continuous(w[:, j], H)
        out = s if out is None else cross_slices(out, s)
    return out


def nested_slices(y, outer: SliceAssignment, H) -> SliceAssignment:
    """Slice ``y`` separately within each outer slice (equal frequency per cell).

    The returned labels index the inner slice only; cross them with ``outer``
    to obtain the joint cells.  ``H=None`` slices ``y`` by its distinct values.
    """
    y = np.asarray(y).ravel()
    if y.size != outer.n:
        raise InvalidInput("length mismatch between y and outer slices")
    inner = np.zeros(outer.n, dtype=int)
    for h in range(1, outer.H + 1):
        idx = outer.members(h)
        if H is None:
            s = slice_discrete(y[idx])
        else:
            s = slice_continuous(y[idx], min(H, idx.size))
        inner[idx] = s.labels
    return SliceAssignment(inner) if inner.min() >= 1 else _renumber(inner)
