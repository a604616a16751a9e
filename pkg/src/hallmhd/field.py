"""Spectral fields on the periodic torus [0, L]^3 and their Fourier multipliers.

Coefficients are stored on the full (complex) FFT grid in numpy's index order,
with the forward transform carrying the 1/N^3 factor so that coefficient
magnitudes do not depend on resolution.  Angular wavenumbers are
``xi = 2*pi*k/L``.

Derivative symbols use ``xi`` with the Nyquist component set to zero, which keeps
every differential operator Hermitian-preserving on even grids.  The heat
multiplier and the Littlewood-Paley profiles use the true radial magnitude.

The module-level functions prefixed with an underscore act on raw coefficient
arrays with arbitrary leading batch axes (vector components on axis -4); the
solver uses them directly to avoid wrapping every node of a trajectory.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, DomainError, IntegrityError

AXES = (-3, -2, -1)
_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Cap the number of threads used by the FFT backend."""
    global _FFT_WORKERS
    if n < 1:
        raise ConfigurationError(f"thread count must be >= 1, got {n}")
    _FFT_WORKERS = int(n)


def get_fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n_per_axis`` points on each side of [0, L]^3."""

    n_per_axis: int = 16
    box_length: float = 2 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.n_per_axis
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigurationError(f"n_per_axis must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"n_per_axis must be a power of two >= 8, got {n}")
        if not (math.isfinite(self.box_length) and self.box_length > 0):
            raise ConfigurationError(f"box_length must be positive, got {self.box_length}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ConfigurationError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )
        object.__setattr__(self, "n_per_axis", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def k_min(self) -> float:
        """Smallest nonzero angular wavenumber."""
        return 2 * math.pi / self.box_length

    def coordinates(self) -> np.ndarray:
        """Physical sample positions, shape (3, N, N, N)."""
        x = np.arange(self.n_per_axis) * self.spacing
        return np.array(np.meshgrid(x, x, x, indexing="ij"))

    def with_box_length(self, box_length: float) -> "GridSpec":
        return GridSpec(self.n_per_axis, box_length, self.dealias_fraction)

    def to_dict(self) -> dict:
        return {
            "n_per_axis": self.n_per_axis,
            "box_length": self.box_length,
            "dealias_fraction": self.dealias_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(**d)


class SpectralTables(NamedTuple):
    k: np.ndarray  # integer wavevectors, (3, N, N, N)
    xi: np.ndarray  # derivative symbol, Nyquist component zeroed
    xi_sq: np.ndarray
    inv_xi_sq: np.ndarray  # 0 where xi_sq == 0
    kmag_sq: np.ndarray  # true |xi|^2
    kmag: np.ndarray
    dealias: np.ndarray  # bool, spherical truncation


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@functools.lru_cache(maxsize=16)
def spectral_tables(grid: GridSpec) -> SpectralTables:
    n = grid.n_per_axis
    k1 = np.fft.fftfreq(n, d=1.0 / n)
    k = np.array(np.meshgrid(k1, k1, k1, indexing="ij"))
    scale = 2 * np.pi / grid.box_length
    kd1 = k1.copy()
    kd1[n // 2] = 0.0
    kd = np.array(np.meshgrid(kd1, kd1, kd1, indexing="ij"))
    xi = kd * scale
    xi_sq = np.sum(xi**2, axis=0)
    inv = np.zeros_like(xi_sq)
    nz = xi_sq > 0
    inv[nz] = 1.0 / xi_sq[nz]
    kmag_sq = np.sum((k * scale) ** 2, axis=0)
    radius = grid.dealias_fraction * (n / 2)
    dealias = np.sum(k**2, axis=0) <= radius**2 * (1 + 1e-12)
    return SpectralTables(
        *(_readonly(a) for a in (k, xi, xi_sq, inv, kmag_sq, np.sqrt(kmag_sq), dealias))
    )


# ---------------------------------------------------------------- raw kernels


def _fftn(a):
    return sfft.fftn(a, axes=AXES, workers=_FFT_WORKERS)


def _ifftn(a):
    return sfft.ifftn(a, axes=AXES, workers=_FFT_WORKERS)


def _to_spec(x: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _fftn(x) / grid.n_per_axis**3


def _to_phys(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _ifftn(c).real * grid.n_per_axis**3


def _div(c, t: SpectralTables):
    return 1j * np.sum(t.xi * c, axis=-4)


def _grad(s, t: SpectralTables):
    return 1j * t.xi * s[..., None, :, :, :]


def _cross(a, b):
    """Cross product along axis -4."""
    a0, a1, a2 = a[..., 0, :, :, :], a[..., 1, :, :, :], a[..., 2, :, :, :]
    b0, b1, b2 = b[..., 0, :, :, :], b[..., 1, :, :, :], b[..., 2, :, :, :]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-4)


def _curl(c, t: SpectralTables):
    return 1j * _cross(np.broadcast_to(t.xi, c.shape), c)


def _leray(c, t: SpectralTables):
    out = c - t.xi * (np.sum(t.xi * c, axis=-4) * t.inv_xi_sq)[..., None, :, :, :]
    out[..., 0, 0, 0] = 0.0
    return out


def _curl_inv(c, t: SpectralTables):
    return 1j * t.inv_xi_sq * _cross(np.broadcast_to(t.xi, c.shape), c)


def _heat(c, kappa_t, t: SpectralTables):
    return np.exp(-kappa_t * t.kmag_sq) * c


def _dealias(c, t: SpectralTables):
    return np.where(t.dealias, c, 0.0)


def _tensor_div_phys(vp, wp, grid: GridSpec):
    """div(v (x) w) from physical samples, with the product dealiased.

    Component i of the result is sum_k d_k (v_i w_k).
    """
    t = spectral_tables(grid)
    prod = vp[..., :, None, :, :, :] * wp[..., None, :, :, :, :]
    ph = _dealias(_to_spec(prod, grid), t)
    return 1j * np.sum(t.xi[None] * ph, axis=-4)


# ---------------------------------------------------------------- field types


class _Field:
    """Immutable container of spectral coefficients on a grid."""

    _lead: tuple = ()

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: GridSpec, coeffs, *, copy: bool = True):
        arr = np.array(coeffs, dtype=np.complex128, copy=copy)
        expected = self._lead + grid.shape
        if arr.shape != expected:
            raise ConfigurationError(
                f"{type(self).__name__} coefficients must have shape {expected}, got {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def _wrap(cls, grid, coeffs):
        return cls(grid, coeffs, copy=False)

    @classmethod
    def zeros(cls, grid: GridSpec):
        return cls._wrap(grid, np.zeros(cls._lead + grid.shape, dtype=np.complex128))

    def _check_grid(self, other):
        if other.grid != self.grid:
            raise IntegrityError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check_grid(other)
        return type(self)._wrap(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_grid(other)
        return type(self)._wrap(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return type(self)._wrap(self.grid, self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)._wrap(self.grid, -self.coeffs)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.grid.n_per_axis}, L={self.grid.box_length:g})"

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[..., 0, 0, 0].real.copy()

    def mean_free(self):
        c = self.coeffs.copy()
        c[..., 0, 0, 0] = 0.0
        return type(self)._wrap(self.grid, c)

    def dealiased(self):
        return type(self)._wrap(self.grid, _dealias(self.coeffs, spectral_tables(self.grid)))

    def l2_norm(self) -> float:
        """Continuum L^2 norm over the torus (Parseval)."""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def max_abs_physical(self) -> float:
        return float(np.max(np.abs(_to_phys(self.coeffs, self.grid))))

    def hermitian_defect(self) -> float:
        """Max |c(-k) - conj c(k)| relative to max |c|."""
        c = self.coeffs
        flipped = np.roll(np.flip(c, axis=AXES), 1, axis=AXES)
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - np.conj(flipped))) / scale)


class ScalarField(_Field):
    """Real scalar field (pressure, Lambda, a divergence)."""

    __slots__ = ()
    _lead = ()


class VectorField(_Field):
    """Real 3-component vector field."""

    __slots__ = ()
    _lead = (3,)

    def component(self, i: int) -> ScalarField:
        return ScalarField._wrap(self.grid, self.coeffs[i])


class TensorField(_Field):
    """Real 3x3 tensor field, e.g. v (x) w."""

    __slots__ = ()
    _lead = (3, 3)


# ---------------------------------------------------------------- operations


def to_spectral(samples, grid: GridSpec) -> VectorField:
    """Forward transform of real samples with shape (3, N, N, N)."""
    x = np.asarray(samples, dtype=float)
    if x.shape != (3,) + grid.shape:
        raise ConfigurationError(f"samples must have shape {(3,) + grid.shape}, got {x.shape}")
    return VectorField._wrap(grid, _to_spec(x, grid))


def scalar_to_spectral(samples, grid: GridSpec) -> ScalarField:
    x = np.asarray(samples, dtype=float)
    if x.shape != grid.shape:
        raise ConfigurationError(f"samples must have shape {grid.shape}, got {x.shape}")
    return ScalarField._wrap(grid, _to_spec(x, grid))


def to_physical(f: _Field, tol: float = 1e-12) -> np.ndarray:
    """Inverse transform; raises IntegrityError if the field is not real."""
    z = _ifftn(f.coeffs) * f.grid.n_per_axis**3
    scale = np.max(np.abs(z.real)) if z.size else 0.0
    resid = np.max(np.abs(z.imag)) if z.size else 0.0
    if resid > tol * max(scale, np.finfo(float).tiny):
        raise IntegrityError(
            f"coefficients are not Hermitian: imaginary residue {resid:.3e} vs magnitude {scale:.3e}"
        )
    return z.real


def divergence(f: VectorField) -> ScalarField:
    return ScalarField._wrap(f.grid, _div(f.coeffs, spectral_tables(f.grid)))


def gradient(s: ScalarField) -> VectorField:
    return VectorField._wrap(s.grid, _grad(s.coeffs, spectral_tables(s.grid)))


def laplacian(f: _Field) -> _Field:
    return type(f)._wrap(f.grid, -spectral_tables(f.grid).kmag_sq * f.coeffs)


def curl(f: VectorField) -> VectorField:
    return VectorField._wrap(f.grid, _curl(f.coeffs, spectral_tables(f.grid)))


def leray_project(f: VectorField) -> VectorField:
    return VectorField._wrap(f.grid, _leray(f.coeffs, spectral_tables(f.grid)))


def curl_inv(j: VectorField) -> VectorField:
    """Multiplier i |xi|^-2 xi x; inverts curl on divergence-free mean-free fields."""
    return VectorField._wrap(j.grid, _curl_inv(j.coeffs, spectral_tables(j.grid)))


def heat_propagate(f: _Field, t: float, kappa: float = 1.0) -> _Field:
    """Apply exp(kappa t Laplacian)."""
    if t < 0:
        raise DomainError(f"heat semigroup needs t >= 0, got {t}")
    if kappa <= 0:
        raise DomainError(f"diffusivity must be positive, got {kappa}")
    return type(f)._wrap(f.grid, _heat(f.coeffs, kappa * t, spectral_tables(f.grid)))


def tensor_divergence(v: VectorField, w: VectorField) -> VectorField:
    """div(v (x) w), i.e. (w . grad) v for divergence-free w."""
    v._check_grid(w)
    g = v.grid
    out = _tensor_div_phys(_to_phys(v.coeffs, g), _to_phys(w.coeffs, g), g)
    return VectorField._wrap(g, out)


def outer(v: VectorField, w: VectorField) -> TensorField:
    """Dealiased pointwise product v_i w_k."""
    v._check_grid(w)
    g = v.grid
    prod = _to_phys(v.coeffs, g)[:, None] * _to_phys(w.coeffs, g)[None, :]
    return TensorField._wrap(g, _dealias(_to_spec(prod, g), spectral_tables(g)))


def cross_product(v: VectorField, w: VectorField) -> VectorField:
    """Dealiased pointwise v x w."""
    v._check_grid(w)
    g = v.grid
    prod = _cross(_to_phys(v.coeffs, g), _to_phys(w.coeffs, g))
    return VectorField._wrap(g, _dealias(_to_spec(prod, g), spectral_tables(g)))


def dot_product(v: VectorField, w: VectorField) -> ScalarField:
    v._check_grid(w)
    g = v.grid
    prod = np.sum(_to_phys(v.coeffs, g) * _to_phys(w.coeffs, g), axis=0)
    return ScalarField._wrap(g, _dealias(_to_spec(prod, g), spectral_tables(g)))


class Pressure(NamedTuple):
    total: ScalarField  # Lambda = phi + |B|^2 / 2
    phi: ScalarField


def recover_pressure(u: VectorField, b: VectorField) -> Pressure:
    """Total pressure Lambda and kinetic pressure phi, both mean-free.

    Lambda solves Laplacian(Lambda) = div F with F = div(B (x) B) - div(u (x) u).
    """
    u._check_grid(b)
    t = spectral_tables(u.grid)
    force = tensor_divergence(b, b).coeffs - tensor_divergence(u, u).coeffs
    lam = -1j * np.sum(t.xi * force, axis=0) * t.inv_xi_sq
    lam[0, 0, 0] = 0.0
    half_b2 = 0.5 * dot_product(b, b).coeffs
    phi = lam - half_b2
    phi[0, 0, 0] = 0.0
    return Pressure(ScalarField._wrap(u.grid, lam), ScalarField._wrap(u.grid, phi))
