"""Symmetric eigen-decomposition, whitening and subspace geometry.

Everything here is a pure function of its inputs.  Tolerances are relative
to the scale of the matrix (largest eigenvalue or trace) so that results do
not depend on the units of the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPSD, RankMismatch

Z_SCALE = "Z_SCALE"
X_SCALE = "X_SCALE"

_ORTHO_TOL = 1e-10
_CLAMP_REL = 1e-10
_NEG_REL = 1e-8


def sym(m) -> np.ndarray:
    """Return ``(m + m.T) / 2`` as a float array, checking shape and finiteness."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return (m + m.T) / 2.0


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the entry of largest magnitude in each is positive."""
    v = np.array(vectors, dtype=float, copy=True)
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order with matching orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class SubspaceBasis:
    """Column-orthonormal ``p x k`` basis of a subspace, tagged with its scale."""

    columns: np.ndarray
    scale: str = Z_SCALE

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim == 1:
            cols = cols[:, None]
        if cols.ndim != 2 or cols.shape[1] < 1 or cols.shape[1] > cols.shape[0]:
            raise InvalidInput(f"bad basis shape {cols.shape}")
        if self.scale not in (Z_SCALE, X_SCALE):
            raise InvalidInput(f"unknown scale {self.scale!r}")
        gram = cols.T @ cols
        if np.max(np.abs(gram - np.eye(cols.shape[1]))) > _ORTHO_TOL:
            raise InvalidInput("basis columns are not orthonormal")
        object.__setattr__(self, "columns", fix_signs(cols))

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def from_span(cls, vectors, scale: str = Z_SCALE) -> "SubspaceBasis":
        """Orthonormalize arbitrary full-column-rank vectors (QR) into a basis."""
        a = np.asarray(vectors, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        q, r = np.linalg.qr(a)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag.min() <= 1e-12 * max(diag.max(), 1e-300):
            raise InvalidInput("vectors are linearly dependent")
        return cls(q, scale)


def sym_eigen(m) -> EigenSystem:
    """Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue.

    Eigenvectors are sign-fixed (largest-magnitude entry positive).  Within a
    block of tied eigenvalues the vectors are ordered lexicographically,
    largest first, so repeated calls give identical output.
    """
    m = sym(m)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = fix_signs(vecs[:, order])

    scale = max(np.max(np.abs(vals)) if vals.size else 0.0, 1e-300)
    tie_tol = 1e-12 * scale
    if vals.size < 2 or np.all(vals[:-1] - vals[1:] > tie_tol):
        return EigenSystem(vals, vecs)
    start = 0
    p = vals.size
    while start < p:
        stop = start + 1
        while stop < p and vals[start] - vals[stop] <= tie_tol:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            keys = [tuple(np.round(col, 12)) for col in block.T]
            perm = sorted(range(stop - start), key=lambda j: keys[j], reverse=True)
            vecs[:, start:stop] = block[:, perm]
        start = stop
    return EigenSystem(vals, vecs)


def inv_sqrt(m, ridge: float = 0.0) -> np.ndarray:
    """Symmetric inverse square root ``V diag((lam + ridge)^-1/2) V^T``.

    Eigenvalues below ``1e-10 * lam_max`` are clamped to that threshold, so a
    numerically singular covariance still yields a finite result.
    """
    if ridge < 0:
        raise InvalidInput("ridge must be nonnegative")
    es = sym_eigen(m)
    lam_max = es.values[0]
    if lam_max <= 0 and ridge == 0:
        raise NotPSD("matrix has no positive eigenvalue")
    if es.values[-1] < -_NEG_REL * max(lam_max, 0.0):
        raise NotPSD(f"smallest eigenvalue {es.values[-1]:.3g} is negative")
    floor = _CLAMP_REL * max(lam_max, 0.0)
    lam = np.maximum(es.values, floor) + ridge
    return sym((es.vectors / np.sqrt(lam)) @ es.vectors.T)


def projection(b: SubspaceBasis) -> np.ndarray:
    """Orthogonal projector onto ``span(b)``; exactly the identity when ``k == p``."""
    if b.rank == b.ambient_dim:
        return np.eye(b.ambient_dim)
    c = b.columns
    return sym(c @ c.T)


def trace_correlation(b1: SubspaceBasis, b2: SubspaceBasis) -> float:
    """Trace correlation ``sqrt(tr(P1 P2) / d)`` between two d-dimensional subspaces."""
    if b1.ambient_dim != b2.ambient_dim:
        raise RankMismatch("bases live in different ambient dimensions")
    if b1.rank != b2.rank:
        raise RankMismatch(f"ranks differ: {b1.rank} vs {b2.rank}")
    # tr(P1 P2) = ||B1^T B2||_F^2 for orthonormal B1, B2
    t = np.sum((b1.columns.T @ b2.columns) ** 2) / b1.rank
    return float(np.sqrt(min(max(t, 0.0), 1.0)))


def leading_basis(m, k: int, scale: str = Z_SCALE) -> tuple[SubspaceBasis, np.ndarray]:
    """Leading ``k`` eigenvectors of a symmetric matrix and their eigenvalues."""
    es = sym_eigen(m)
    if not 1 <= k <= es.values.size:
        raise InvalidInput(f"requested {k} eigenvectors from a {es.values.size}-dim matrix")
    return SubspaceBasis(es.vectors[:, :k], scale), es.values[:k]
