"""Seeded random divergence-free fields.

Coefficients are drawn on the integer box [-K, K]^3 in a fixed order and then
scattered onto the grid, so one seed gives the same continuum field on every
grid that resolves |k| <= k_cut.  That is what refinement studies rely on.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .field import GridSpec, VectorField, _leray, spectral_tables
from .nonlinear import ExtendedState


def default_k_cut(grid: GridSpec) -> float:
    return math.floor(grid.dealias_fraction * grid.n_per_axis / 2)


def random_divfree(grid: GridSpec, rng: np.random.Generator, alpha: float = 2.0,
                   k_cut: float | None = None, amplitude: float = 1.0) -> VectorField:
    """Leray-projected complex Gaussian field with |xi|^-alpha spectral decay.

    Normalized so its root-mean-square value is ``amplitude``.
    """
    if k_cut is None:
        k_cut = default_k_cut(grid)
    kmax = int(math.floor(k_cut))
    if kmax < 1:
        raise ConfigurationError(f"k_cut must be >= 1, got {k_cut}")
    if kmax >= grid.n_per_axis // 2:
        raise ConfigurationError(f"k_cut={k_cut} is not resolved by n={grid.n_per_axis}")
    side = 2 * kmax + 1
    raw = rng.standard_normal((3, side, side, side)) + 1j * rng.standard_normal((3, side, side, side))
    # c(-k) = conj c(k): the box is symmetric so flipping every axis maps k -> -k
    raw = 0.5 * (raw + np.conj(raw[:, ::-1, ::-1, ::-1]))
    ks = np.arange(-kmax, kmax + 1)
    kx, ky, kz = np.meshgrid(ks, ks, ks, indexing="ij")
    k2 = kx**2 + ky**2 + kz**2
    keep = (k2 > 0) & (k2 <= k_cut**2 * (1 + 1e-12))
    xi_mag = np.sqrt(k2) * grid.k_min
    weight = np.where(keep, np.power(np.where(keep, xi_mag, 1.0), -alpha), 0.0)
    n = grid.n_per_axis
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    coeffs[:, kx % n, ky % n, kz % n] = raw * weight
    coeffs = _leray(coeffs, spectral_tables(grid))
    rms = math.sqrt(float(np.sum(np.abs(coeffs) ** 2)))
    if rms > 0:
        coeffs *= amplitude / rms
    return VectorField._wrap(grid, coeffs)


def random_state(grid: GridSpec, rng: np.random.Generator, alpha: float = 2.0,
                 k_cut: float | None = None, amplitude: float = 1.0) -> ExtendedState:
    """Consistent random triple: independent u and B, J = curl B."""
    u = random_divfree(grid, rng, alpha, k_cut, amplitude)
    b = random_divfree(grid, rng, alpha, k_cut, amplitude)
    return ExtendedState.from_ub(u, b)


def substreams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for ``n`` samples derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
