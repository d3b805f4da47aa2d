"""Kernel matrices whose column spaces estimate the subspaces of interest.

All kernels live on the standardized (Z) scale.  Sample covariances use the
``n - 1`` divisor throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPSD
from .linalg import Z_SCALE, inv_sqrt, sym, sym_eigen
from .slicing import (
    SliceAssignment,
    cross_slices,
    nested_slices,
    slice_columns,
    slice_continuous,
    slice_discrete,
)

SIR = "SIR"
SAVE = "SAVE"
JOINT_SIR = "JOINT_SIR"
PSIR = "PSIR"
W_SIR = "W_SIR"
PARTIAL = "PARTIAL"
HYBRID = "HYBRID"

_NEG_REL = 1e-8

_KINDS = {SIR, SAVE, JOINT_SIR, PSIR, W_SIR, PARTIAL, HYBRID}


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric PSD ``p x p`` kernel tagged with the method that built it."""

    matrix: np.ndarray
    kind: str
    scale: str = Z_SCALE

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInput(f"unknown kernel kind {self.kind!r}")
        m = sym(self.matrix)
        vals = np.linalg.eigvalsh(m)
        if vals.size and vals[0] < -_NEG_REL * max(vals[-1], 0.0):
            raise NotPSD(f"kernel has eigenvalue {vals[0]:.3g} < 0")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return sym_eigen(self.matrix).values

    def is_psd(self, rel_tol: float = 1e-8) -> bool:
        vals = self.eigenvalues()
        return bool(vals[-1] >= -rel_tol * max(vals[0], 0.0))


@dataclass(frozen=True)
class StandardizedData:
    z: np.ndarray
    mu_hat: np.ndarray
    sigma_inv_sqrt: np.ndarray

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInput("expected an n x p matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("data has non-finite entries")
    return x


def standardize(x) -> StandardizedData:
    """Whiten ``x``: ``z = (x - mean) @ cov^{-1/2}``."""
    x = _as_2d(x)
    if x.shape[0] < 2:
        raise InvalidInput("need at least two observations")
    mu = x.mean(axis=0)
    xc = x - mu
    cov = xc.T @ xc / (x.shape[0] - 1)
    s = inv_sqrt(cov)
    return StandardizedData(xc @ s, mu, s)


def _zmat(z) -> np.ndarray:
    return z.z if isinstance(z, StandardizedData) else _as_2d(z)


def _check_len(z: np.ndarray, slices: SliceAssignment) -> None:
    if z.shape[0] != slices.n:
        raise InvalidInput(f"{z.shape[0]} rows but {slices.n} slice labels")


def _slice_means(z: np.ndarray, slices: SliceAssignment) -> np.ndarray:
    sums = np.zeros((slices.H, z.shape[1]))
    np.add.at(sums, slices.labels - 1, z)
    return sums / slices.counts[:, None]


def sir_kernel(z, slices: SliceAssignment, kind: str = SIR) -> KernelMatrix:
    """SIR kernel: slice-size weighted sum of outer products of slice means."""
    z = _zmat(z)
    _check_len(z, slices)
    m = _slice_means(z, slices)
    w = slices.counts / slices.n
    return KernelMatrix((m * w[:, None]).T @ m, kind)


def save_kernel(z, slices: SliceAssignment) -> KernelMatrix:
    """SAVE kernel ``sum_h (n_h/n) (I - cov(z | slice h))^2``."""
    z = _zmat(z)
    _check_len(z, slices)
    slices.require_min_size(2)
    p = z.shape[1]
    eye = np.eye(p)
    k = np.zeros((p, p))
    for h, n_h in enumerate(slices.counts, start=1):
        zh = z[slices.labels == h]
        zc = zh - zh.mean(axis=0)
        d = eye - zc.T @ zc / (n_h - 1)
        k += (n_h / slices.n) * (d @ d)
    return KernelMatrix(k, SAVE)


def joint_sir_kernel(z, y_slices: SliceAssignment, w_slices: SliceAssignment) -> KernelMatrix:
    """SIR with ``(Y, W)`` cross-classified as the slicing variable."""
    return sir_kernel(z, cross_slices(y_slices, w_slices), kind=JOINT_SIR)


def w_sir_kernel(z, w_slices: SliceAssignment) -> KernelMatrix:
    """SIR of Z on the auxiliary variable: ``W`` takes the place of ``Y``."""
    return sir_kernel(z, w_slices, kind=W_SIR)


@dataclass(frozen=True)
class PsirResult:
    """Partial SIR kernel (in the pooled within-slice whitened scale) and ``Sigma_0``."""

    kernel: KernelMatrix
    sigma0: np.ndarray


def psir_kernel(z, y, w_slices: SliceAssignment, h_y=3, min_size=None) -> PsirResult:
    """Partial SIR.

    Within each W-slice the data are centred at the slice mean; the pooled
    within-slice covariance ``Sigma_0 = sum_w (n_w/n) Sigma_w`` whitens all
    slices jointly, then a SIR kernel on ``Y`` is built inside every W-slice
    and the kernels are averaged with weights ``n_w / n``.

    ``y`` may be raw responses, sliced with ``h_y`` equal-frequency slices per
    W-slice (``h_y=None`` slices by distinct value), or a prebuilt
    ``SliceAssignment`` of the inner labels.
    """
    z = _zmat(z)
    _check_len(z, w_slices)
    n, p = z.shape
    need = p + 1 if min_size is None else min_size
    w_slices.require_min_size(need)

    if isinstance(y, SliceAssignment):
        inner = y
    else:
        inner = nested_slices(y, w_slices, h_y)
    if inner.n != n:
        raise InvalidInput("length mismatch between y and z")

    zc = np.empty_like(z)
    sigma0 = np.zeros((p, p))
    for w, n_w in enumerate(w_slices.counts, start=1):
        idx = w_slices.labels == w
        c = z[idx] - z[idx].mean(axis=0)
        zc[idx] = c
        sigma0 += (n_w / n) * (c.T @ c) / (n_w - 1)
    s0 = inv_sqrt(sigma0)
    zstar = zc @ s0

    k = np.zeros((p, p))
    for w, n_w in enumerate(w_slices.counts, start=1):
        idx = np.flatnonzero(w_slices.labels == w)
        y_w = slice_discrete(inner.labels[idx])
        k += (n_w / n) * sir_kernel(zstar[idx], y_w).matrix
    return PsirResult(KernelMatrix(k, PSIR), sym(sigma0))


def partial_kernel_zscale(psir: PsirResult) -> KernelMatrix:
    """Move the PSIR kernel to the Z scale: ``S0 K S0`` with ``S0 = Sigma_0^{-1/2}``."""
    s0 = inv_sqrt(psir.sigma0)
    return KernelMatrix(s0 @ psir.kernel.matrix @ s0, PARTIAL)


def psir_directions(psir: PsirResult, k: int) -> np.ndarray:
    """Z-scale PSIR directions: ``Sigma_0^{-1/2}`` times the leading eigenvectors."""
    vecs = sym_eigen(psir.kernel.matrix).vectors[:, :k]
    return inv_sqrt(psir.sigma0) @ vecs


def hybrid_kernel(k_w: KernelMatrix, k_partial: KernelMatrix, xi: float,
                  normalize: bool = False) -> KernelMatrix:
    """Convex combination ``xi * K_W + (1 - xi) * K_partial``.

    With ``normalize`` each input is first scaled to unit trace (a zero
    kernel stays zero).
    """
    if not 0.0 < xi < 1.0:
        raise InvalidInput(f"xi must lie in (0, 1), got {xi}")
    a, b = k_w.matrix, k_partial.matrix
    if a.shape != b.shape:
        raise InvalidInput("kernels have different dimensions")
    if normalize:
        a = a / np.trace(a) if np.trace(a) > 0 else a
        b = b / np.trace(b) if np.trace(b) > 0 else b
    return KernelMatrix(xi * a + (1.0 - xi) * b, HYBRID)


@dataclass(frozen=True)
class KernelSet:
    """Every kernel the two-stage estimators need, built from one data set."""

    data: StandardizedData
    k_yz: KernelMatrix
    k_w: KernelMatrix | None = None
    k_partial: KernelMatrix | None = None
    k_joint: KernelMatrix | None = None
    psir: PsirResult | None = None
    normalize: bool = False

    def hybrid(self, xi: float) -> KernelMatrix:
        if self.k_w is None:
            raise InvalidInput("no auxiliary variable: hybrid kernel unavailable")
        return hybrid_kernel(self.k_w, self.k_partial, xi, self.normalize)

    @property
    def has_w(self) -> bool:
        return self.k_w is not None


@dataclass(frozen=True)
class KernelConfig:
    """Slicing and kernel choices.

    ``h_y``/``h_w``/``h_inner`` set to ``None`` mean "slice by distinct value".
    """

    yz_method: str = SIR
    h_y: int | None = 10
    h_w: int | None = 2
    h_inner: int | None = 3
    normalize: bool = False

    def __post_init__(self):
        if self.yz_method not in (SIR, SAVE):
            raise InvalidInput(f"yz_method must be SIR or SAVE, got {self.yz_method!r}")


def _slice_y(y, h):
    return slice_discrete(y) if h is None else slice_continuous(y, h)


def build_kernels(y, x, w=None, config: KernelConfig = KernelConfig()) -> KernelSet:
    """Standardize ``x`` and build the direct, auxiliary, partial and joint kernels."""
    data = standardize(x)
    y = np.asarray(y).ravel()
    y_sl = _slice_y(y, config.h_y)
    if config.yz_method == SAVE:
        k_yz = save_kernel(data, y_sl)
    else:
        k_yz = sir_kernel(data, y_sl)
    if w is None:
        return KernelSet(data, k_yz, normalize=config.normalize)

    w_sl = slice_columns(w, config.h_w)
    inner = nested_slices(y, w_sl, config.h_inner)
    ps = psir_kernel(data, inner, w_sl)
    return KernelSet(
        data=data,
        k_yz=k_yz,
        k_w=w_sir_kernel(data, w_sl),
        k_partial=partial_kernel_zscale(ps),
        k_joint=joint_sir_kernel(data, inner, w_sl),
        psir=ps,
        normalize=config.normalize,
    )
