"""BIC-type selection of the envelope dimension and the structural dimension."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSpectrum, InvalidInput
from .estimator import envelope_basis, projected_eigenvalues
from .kernels import KernelMatrix

DEFAULT_XI_GRID = tuple(np.round(np.linspace(0.10, 0.90, 41), 10))


def default_penalty(n: int, multiplier: float = 1.0) -> float:
    """``multiplier * n**(1/4)``."""
    return multiplier * n ** 0.25


def bic_criterion(eigenvalues, n: int, c_n: float) -> np.ndarray:
    """Criterion values ``G(k)`` for ``k = 1..p``.

    ``G(k)`` is the share of ``sum_j (ln(lam_j + 1) - lam_j)`` carried by the
    leading ``k`` eigenvalues minus ``(c_n / n)`` times the number of free
    parameters of a rank-``k`` symmetric ``p x p`` matrix.
    """
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    if lam.size == 0:
        raise InvalidInput("empty spectrum")
    lam = np.sort(np.maximum(lam, 0.0))[::-1]
    f = np.log1p(lam) - lam
    total = f.sum()
    if total == 0.0:
        raise DegenerateSpectrum("all eigenvalues are zero")
    p = lam.size
    k = np.arange(1, p + 1)
    return np.cumsum(f) / total - (c_n / n) * (p * k - k * (k - 1) / 2)


def bic_rank(eigenvalues, n: int, c_n: float, k_max: int | None = None) -> int:
    """Maximizer of the BIC-type criterion over ``k = 1..k_max`` (smallest on ties)."""
    g = bic_criterion(eigenvalues, n, c_n)
    if k_max is not None:
        if k_max < 1:
            raise InvalidInput("k_max must be at least 1")
        g = g[:k_max]
    return int(np.argmax(g)) + 1


def lower_median(values: Sequence[int]) -> int:
    """Order statistic ``ceil(m/2)`` (1-based) of the sorted values."""
    v = sorted(values)
    if not v:
        raise InvalidInput("median of an empty collection")
    return int(v[(len(v) + 1) // 2 - 1])


@dataclass
class DimSelection:
    d_env_by_xi: dict = field(default_factory=dict)
    d_by_xi: dict = field(default_factory=dict)
    d_env: int | None = None
    d: int | None = None
    criterion_values: dict = field(default_factory=dict)


def select_d_env(k_env_builder: Callable[[float], KernelMatrix], xi_grid, n: int,
                 c_n: float) -> DimSelection:
    xi_grid = list(xi_grid)
    if not xi_grid:
        raise InvalidInput("xi_grid is empty")
    out = DimSelection()
    for xi in xi_grid:
        vals = k_env_builder(xi).eigenvalues()
        out.criterion_values[("env", xi)] = bic_criterion(vals, n, c_n)
        out.d_env_by_xi[xi] = bic_rank(vals, n, c_n)
    out.d_env = lower_median(out.d_env_by_xi.values())
    return out


def select_d(k_yz: KernelMatrix, k_env_builder: Callable[[float], KernelMatrix], xi_grid,
             n: int, c_n: float) -> DimSelection:
    """Select ``d_env`` and ``d`` over the grid of mixing weights.

    For each ``xi`` the envelope basis uses ``nu = d_env(xi)`` and ``d(xi)``
    is searched over ``1..d_env(xi)`` on the spectrum of the projected kernel.
    """
    out = select_d_env(k_env_builder, xi_grid, n, c_n)
    for xi, nu in out.d_env_by_xi.items():
        b_env = envelope_basis(k_env_builder(xi), nu)
        vals = projected_eigenvalues(k_yz, b_env)
        out.criterion_values[("d", xi)] = bic_criterion(vals, n, c_n)
        out.d_by_xi[xi] = bic_rank(vals, n, c_n, k_max=nu)
    out.d = lower_median(out.d_by_xi.values())
    return out


def select_d_direct(k_yz: KernelMatrix, n: int, c_n: float) -> int:
    """Structural dimension from the unconstrained kernel alone."""
    return bic_rank(k_yz.eigenvalues(), n, c_n)
