"""Direct and two-stage (envelope-constrained) estimators of the central subspace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .kernels import KernelMatrix
from .linalg import X_SCALE, Z_SCALE, SubspaceBasis, leading_basis, projection, sym, sym_eigen

DIRECT = "DIRECT"
TWO_STAGE_NAIVE = "TWO_STAGE_NAIVE"
TWO_STAGE_HYBRID = "TWO_STAGE_HYBRID"


@dataclass(frozen=True)
class EstimateResult:
    basis_z: SubspaceBasis
    eigenvalues_used: np.ndarray
    method: str
    basis_x: SubspaceBasis | None = None
    nu: int | None = None
    xi: float | None = None

    @property
    def d(self) -> int:
        return self.basis_z.rank

    def scores(self, z: np.ndarray) -> np.ndarray:
        """Component scores ``z @ B`` of standardized data."""
        return np.asarray(z) @ self.basis_z.columns


def back_transform(basis_z: SubspaceBasis, sigma_inv_sqrt) -> SubspaceBasis:
    """Map a Z-scale basis to the X scale and re-orthonormalize it."""
    s = np.asarray(sigma_inv_sqrt, dtype=float)
    if s.shape != (basis_z.ambient_dim, basis_z.ambient_dim):
        raise InvalidInput("sigma_inv_sqrt does not match the basis dimension")
    return SubspaceBasis.from_span(s @ basis_z.columns, X_SCALE)


def _result(basis, vals, method, sigma_inv_sqrt, nu=None, xi=None):
    bx = None if sigma_inv_sqrt is None else back_transform(basis, sigma_inv_sqrt)
    return EstimateResult(basis, vals, method, bx, nu, xi)


def direct_estimate(k_yz: KernelMatrix, d: int, sigma_inv_sqrt=None) -> EstimateResult:
    """Leading ``d`` eigenvectors of the kernel."""
    if not 1 <= d <= k_yz.dim:
        raise InvalidInput(f"d={d} must lie in 1..{k_yz.dim}")
    basis, vals = leading_basis(k_yz.matrix, d)
    return _result(basis, vals, DIRECT, sigma_inv_sqrt)


def envelope_basis(k_env: KernelMatrix, nu: int) -> SubspaceBasis:
    """Leading ``nu`` eigenvectors of an envelope kernel."""
    if not 1 <= nu <= k_env.dim:
        raise InvalidInput(f"nu={nu} must lie in 1..{k_env.dim}")
    return leading_basis(k_env.matrix, nu)[0]


def projected_kernel(k_yz: KernelMatrix, b_env: SubspaceBasis) -> np.ndarray:
    """``P K P`` with ``P`` the projector onto the envelope basis."""
    p = projection(b_env)
    return sym(p @ k_yz.matrix @ p)


def projected_eigenvalues(k_yz: KernelMatrix, b_env: SubspaceBasis) -> np.ndarray:
    """All ``p`` eigenvalues of ``P K P``: those of ``B^T K B`` padded with zeros."""
    b = b_env.columns
    vals = sym_eigen(b.T @ k_yz.matrix @ b).values
    return np.concatenate([vals, np.zeros(b_env.ambient_dim - b_env.rank)])


def two_stage_estimate(k_yz: KernelMatrix, b_env: SubspaceBasis, d: int,
                       sigma_inv_sqrt=None, method: str = TWO_STAGE_HYBRID,
                       xi: float | None = None) -> EstimateResult:
    """Leading ``d`` eigenvectors of the kernel projected onto the envelope.

    The eigenproblem is solved in envelope coordinates (``B^T K B``, size
    ``nu x nu``) and mapped back by ``B``, so every returned direction lies
    in ``span(B)`` up to rounding even when the projected spectrum has
    zeros.  When the envelope is the whole space the kernel is used as is.
    """
    nu = b_env.rank
    if not 1 <= d <= nu:
        raise InvalidInput(f"d={d} must lie in 1..nu={nu}")
    if b_env.ambient_dim != k_yz.dim:
        raise InvalidInput("envelope basis and kernel differ in dimension")
    if nu == b_env.ambient_dim:
        basis, vals = leading_basis(k_yz.matrix, d)
    else:
        b = b_env.columns
        es = sym_eigen(b.T @ k_yz.matrix @ b)
        basis = SubspaceBasis(b @ es.vectors[:, :d], Z_SCALE)
        vals = es.values[:d]
    return _result(basis, vals, method, sigma_inv_sqrt, nu=nu, xi=xi)
