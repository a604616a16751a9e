"""Littlewood-Paley blocks, Morrey and Besov-Morrey norms, and X_p(T) norms.

The dyadic profiles are built by telescoping a single radial cutoff ``theta``
(equal to 1 on |xi| <= 3/2 and 0 on |xi| >= 8/3)::

    phi(xi) = theta(xi) - theta(2 xi)      supported in 3/4 <= |xi| <= 8/3
    psi(xi) = theta(2 xi)                  supported in |xi| <= 4/3

so both partition identities hold to rounding on every grid frequency.

Morrey suprema are taken over a finite family of periodic balls (see
:class:`MorreyPolicy`).  Each ball is weighted by its discrete measure,
``|B|^(1/p - 1/q)``, which is the volume form of the usual ``R^(n/p - n/q)``
weight; with it the q = p case reduces to the L^p norm and the norm is
monotone in q with constant one.  Ball sums for every center at once come from
one FFT convolution of ``|u|^q`` with the ball indicator.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, DomainError, IntegrityError
from .field import (
    AXES,
    GridSpec,
    _Field,
    _to_phys,
    get_fft_workers,
    spectral_tables,
)

THETA_FLAT = 1.5
THETA_ZERO = 8.0 / 3.0


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return f / (f + g)


def radial_cutoff(r: np.ndarray) -> np.ndarray:
    """theta(r): 1 on [0, 3/2], 0 on [8/3, inf), smooth and monotone between."""
    r = np.asarray(r, dtype=float)
    return _smooth_step((THETA_ZERO - r) / (THETA_ZERO - THETA_FLAT))


def phi_profile(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return radial_cutoff(r) - radial_cutoff(2.0 * r)


def psi_profile(r: np.ndarray) -> np.ndarray:
    return radial_cutoff(2.0 * np.asarray(r, dtype=float))


@dataclass(frozen=True, eq=False)
class LPPartition:
    """Dyadic partition restricted to the bands a grid can resolve."""

    grid: GridSpec
    j_min: int
    j_max: int
    multipliers: np.ndarray = field(repr=False)  # (n_bands, N, N, N)

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def n_bands(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def j_values(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1, dtype=float)

    def phi(self, j: int) -> np.ndarray:
        self._check_band(j)
        return self.multipliers[j - self.j_min]

    def psi(self) -> np.ndarray:
        return psi_profile(spectral_tables(self.grid).kmag)

    def _check_band(self, j: int):
        if not (self.j_min <= j <= self.j_max):
            raise DomainError(f"band {j} outside resolvable range [{self.j_min}, {self.j_max}]")


@functools.lru_cache(maxsize=16)
def build_partition(grid: GridSpec) -> LPPartition:
    """Littlewood-Paley partition covering every nonzero frequency of ``grid``."""
    kmag = spectral_tables(grid).kmag
    k_lo = grid.k_min
    k_hi = float(kmag.max())
    # lowest band: theta(2^(1-j) k_lo) == 0  <=>  2^j * 4/3 <= k_lo
    j_min = math.floor(math.log2(0.75 * k_lo)) + 1
    while 2.0**j_min * (4.0 / 3.0) > k_lo:
        j_min -= 1
    # highest band: theta(2^-j k_hi) == 1  <=>  2^j * 3/2 >= k_hi
    j_max = math.ceil(math.log2(k_hi / THETA_FLAT)) - 1
    while 2.0**j_max * THETA_FLAT < k_hi:
        j_max += 1
    if j_max - j_min < 1:
        raise ConfigurationError(f"grid {grid} too small to host a full dyadic annulus")
    js = np.arange(j_min, j_max + 1, dtype=float)
    scale = np.exp2(-js)[:, None, None, None]
    mult = radial_cutoff(kmag[None] * scale) - radial_cutoff(kmag[None] * 2.0 * scale)
    mult.flags.writeable = False
    return LPPartition(grid, j_min, j_max, mult)


def lp_block(u: _Field, j: int, part: LPPartition | None = None) -> _Field:
    part = part or build_partition(u.grid)
    return type(u)._wrap(u.grid, part.phi(j) * u.coeffs)


def decompose(u: _Field, part: LPPartition | None = None) -> dict[int, _Field]:
    """All dyadic blocks of ``u`` keyed by band index."""
    part = part or build_partition(u.grid)
    return {j: lp_block(u, j, part) for j in part.bands}


# ---------------------------------------------------------------- Morrey


@dataclass(frozen=True)
class MorreyPolicy:
    """Finite family of balls over which the Morrey supremum is taken.

    Centers lie on every ``center_stride``-th grid point.  Radii are dyadic,
    L/2, L/4, ... down to ``min_radius_cells`` grid spacings, plus (when
    ``include_full_torus``) the ball of radius sqrt(3) L / 2 that covers the
    whole torus.
    """

    center_stride: int = 2
    min_radius_cells: float = 2.0
    include_full_torus: bool = True

    def __post_init__(self):
        if self.center_stride < 1:
            raise ConfigurationError("center_stride must be >= 1")
        if self.min_radius_cells <= 0:
            raise ConfigurationError("min_radius_cells must be positive")

    def radii(self, grid: GridSpec) -> list[float]:
        out = []
        if self.include_full_torus:
            out.append(math.sqrt(3.0) * grid.box_length / 2)
        r = grid.box_length / 2
        floor = self.min_radius_cells * grid.spacing
        while r >= floor * (1 - 1e-12):
            out.append(r)
            r /= 2
        if not out:
            raise ConfigurationError("Morrey policy yields no balls on this grid")
        return out

    def to_dict(self) -> dict:
        return {
            "center_stride": self.center_stride,
            "min_radius_cells": self.min_radius_cells,
            "include_full_torus": self.include_full_torus,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MorreyPolicy":
        return cls(**d)


@functools.lru_cache(maxsize=64)
def _ball_kernel(grid: GridSpec, radius: float):
    """(rfft of the periodic ball indicator, point count), or (None, N^3) if it covers the torus."""
    n = grid.n_per_axis
    off = np.arange(n) * grid.spacing
    d1 = np.minimum(off, grid.box_length - off)
    d2 = d1[:, None, None] ** 2 + d1[None, :, None] ** 2 + d1[None, None, :] ** 2
    ind = (d2 <= radius**2 * (1 + 1e-12)).astype(float)
    count = int(ind.sum())
    if count == n**3:
        return None, count
    kern = sfft.rfftn(ind, axes=AXES)
    kern.flags.writeable = False
    return kern, count


def _morrey_of_samples(x: np.ndarray, grid: GridSpec, p: float, q: float, policy: MorreyPolicy):
    """Morrey norm of each scalar slice ``x[..., :, :, :]``; returns shape x.shape[:-3]."""
    h3 = grid.cell_volume
    pw = np.abs(x) ** q
    lead = pw.shape[:-3]
    best = np.zeros(lead)
    spec = None
    s = policy.center_stride
    for radius in policy.radii(grid):
        kern, count = _ball_kernel(grid, radius)
        weight = (count * h3) ** (1.0 / p - 1.0 / q)
        if kern is None:
            sums = pw.sum(axis=AXES) * h3
        else:
            if spec is None:
                spec = sfft.rfftn(pw, axes=AXES, workers=get_fft_workers())
            conv = sfft.irfftn(spec * kern, s=grid.shape, axes=AXES, workers=get_fft_workers())
            sums = np.clip(conv[..., ::s, ::s, ::s], 0.0, None).max(axis=AXES) * h3
        best = np.maximum(best, weight * sums ** (1.0 / q))
    return best


def _check_exponents(p: float, q: float):
    if not (1 <= q and math.isfinite(p)):
        raise DomainError(f"need 1 <= q <= p < inf, got p={p}, q={q}")
    if q > p:
        raise DomainError(f"Morrey norm needs q <= p, got q={q} > p={p}")


def morrey_norm(u, p: float, q: float, policy: MorreyPolicy | None = None, grid: GridSpec | None = None) -> float:
    """Morrey norm M^p_q of a field (max over components).

    ``u`` is a spectral field or an array of physical samples; in the latter
    case ``grid`` must be given.
    """
    _check_exponents(p, q)
    policy = policy or MorreyPolicy()
    if isinstance(u, _Field):
        grid = u.grid
        x = _to_phys(u.coeffs, grid)
    else:
        if grid is None:
            raise ConfigurationError("grid is required for raw samples")
        x = np.asarray(u, dtype=float)
        if x.shape[-3:] != grid.shape:
            raise ConfigurationError(f"samples shape {x.shape} does not match grid")
    vals = _morrey_of_samples(x, grid, p, q, policy)
    return float(np.max(vals)) if np.ndim(vals) else float(vals)


def lp_norm(u: _Field, p: float) -> float:
    """Discrete L^p norm over the torus (max over components)."""
    x = np.abs(_to_phys(u.coeffs, u.grid)) ** p
    vals = (x.sum(axis=AXES) * u.grid.cell_volume) ** (1.0 / p)
    return float(np.max(vals))


# ---------------------------------------------------------------- Besov-Morrey


@dataclass(frozen=True)
class NormSpec:
    """Index tuple (s, p, q, r) of a homogeneous Besov-Morrey norm."""

    s: float = 0.0
    p: float = 3.0
    q: float = 2.0
    r: float = 1.0
    policy: MorreyPolicy = MorreyPolicy()

    def __post_init__(self):
        if not (1 <= self.q <= self.p < math.inf):
            raise ConfigurationError(f"need 1 <= q <= p < inf, got p={self.p}, q={self.q}")
        if self.r not in (1, 1.0, math.inf):
            raise ConfigurationError(f"summability r must be 1 or inf, got {self.r}")
        object.__setattr__(self, "r", float(self.r))

    @classmethod
    def critical(cls, p: float = 3.0, q: float = 2.0, shift: float = -1.0, **kw) -> "NormSpec":
        """Norm with regularity 3/p + shift (shift = -1 is the scaling-critical index)."""
        return cls(s=3.0 / p + shift, p=p, q=q, **kw)

    def with_s(self, s: float) -> "NormSpec":
        return replace(self, s=float(s))

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "p": self.p,
            "q": self.q,
            "r": "inf" if math.isinf(self.r) else self.r,
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormSpec":
        d = dict(d)
        if d.get("r") == "inf":
            d["r"] = math.inf
        if "policy" in d:
            d["policy"] = MorreyPolicy.from_dict(d["policy"])
        return cls(**d)


_CHUNK_BYTES = 48 * 2**20


def band_norms(coeffs: np.ndarray, grid: GridSpec, spec: NormSpec, part: LPPartition | None = None,
               component_axes: int = 1) -> np.ndarray:
    """Morrey norm of every dyadic block, max over the trailing component axes.

    ``coeffs`` has shape ``lead + comps + (N, N, N)`` with ``len(comps) ==
    component_axes``; the result has shape ``lead + (n_bands,)``.
    """
    part = part or build_partition(grid)
    c = np.asarray(coeffs)
    body = c.shape[: c.ndim - 3]
    lead, comps = body[: len(body) - component_axes], body[len(body) - component_axes:]
    flat = c.reshape((-1,) + comps + grid.shape)
    per_item = part.n_bands * int(np.prod(comps, dtype=int)) * grid.n_per_axis**3 * 16
    chunk = max(1, _CHUNK_BYTES // max(per_item, 1))
    out = np.empty((flat.shape[0], part.n_bands))
    mult = part.multipliers.reshape((part.n_bands,) + (1,) * len(comps) + grid.shape)
    for start in range(0, flat.shape[0], chunk):
        sub = flat[start:start + chunk]
        blocks = _to_phys(sub[:, None] * mult[None], grid)
        vals = _morrey_of_samples(blocks, grid, spec.p, spec.q, spec.policy)
        if comps:
            vals = vals.reshape(vals.shape[:2] + (-1,)).max(axis=-1)
        out[start:start + chunk] = vals
    return out.reshape(lead + (part.n_bands,))


def combine_bands(m: np.ndarray, s: float, r: float, part: LPPartition) -> np.ndarray:
    """ell^r sum over the last axis of 2^(s j) m_j."""
    w = np.exp2(s * part.j_values)
    weighted = m * w
    if math.isinf(r):
        return weighted.max(axis=-1)
    return weighted.sum(axis=-1)


def besov_morrey_norm(u: _Field, spec: NormSpec, part: LPPartition | None = None) -> float:
    part = part or build_partition(u.grid)
    comp_axes = u.coeffs.ndim - 3
    m = band_norms(u.coeffs, u.grid, spec, part, component_axes=comp_axes)
    return float(combine_bands(m, spec.s, spec.r, part))


# ---------------------------------------------------------------- space-time


class SpacetimeNorms(NamedTuple):
    linf_low: float
    l1_high: float
    l2_mid: float
    x_norm: float


def _trapezoid(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    dt = np.diff(t)
    return np.sum(0.5 * dt * (y[..., 1:] + y[..., :-1]), axis=-1)


def trajectory_band_norms(traj, spec: NormSpec, part: LPPartition | None = None) -> np.ndarray:
    """Band norms of every node and field of a trajectory, shape (nodes, fields, bands)."""
    part = part or build_partition(traj.grid)
    return band_norms(traj.data, traj.grid, spec, part, component_axes=1)


def spacetime_from_bands(m: np.ndarray, times: np.ndarray, s_low: float, r: float,
                         part: LPPartition) -> SpacetimeNorms:
    """X_p(T)-type norms from precomputed band norms (nodes, fields, bands).

    Each field is measured separately and the results are summed, so a triple
    (u, B, J) gets ||u||_X + ||B||_X + ||J||_X.
    """
    low = combine_bands(m, s_low, r, part)  # (nodes, fields)
    mid = combine_bands(m, s_low + 1, r, part)
    high = combine_bands(m, s_low + 2, r, part)
    linf = float(np.sum(low.max(axis=0)))
    l1 = float(np.sum(_trapezoid(high.T, times)))
    l2 = float(math.sqrt(np.sum(_trapezoid((mid**2).T, times))))
    return SpacetimeNorms(linf, l1, l2, linf + l1)


def spacetime_norms(traj, spec_low: NormSpec, spec_high: NormSpec | None = None,
                    part: LPPartition | None = None) -> SpacetimeNorms:
    """L-infinity-in-time (index s), L^1-in-time (s + 2) and L^2-in-time (s + 1) norms."""
    if spec_high is None:
        spec_high = spec_low.with_s(spec_low.s + 2)
    if not math.isclose(spec_high.s, spec_low.s + 2, abs_tol=1e-12):
        raise ConfigurationError("spec_high.s must equal spec_low.s + 2")
    if (spec_high.p, spec_high.q, spec_high.r, spec_high.policy) != (
        spec_low.p, spec_low.q, spec_low.r, spec_low.policy
    ):
        raise ConfigurationError("spec_low and spec_high may differ only in s")
    times = np.asarray(traj.times, dtype=float)
    if times.size < 2:
        raise ConfigurationError("a trajectory needs at least two time nodes")
    part = part or build_partition(traj.grid)
    m = trajectory_band_norms(traj, spec_low, part)
    return spacetime_from_bands(m, times, spec_low.s, spec_low.r, part)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class NormReport:
    field_id: str
    s: float
    p: float
    q: float
    r: float
    value: float
    policy: dict
    j_range: tuple[int, int]

    CSV_COLUMNS = ("field_id", "s", "p", "q", "r", "value", "policy", "j_range")

    @classmethod
    def evaluate(cls, field_id: str, u: _Field, spec: NormSpec, part: LPPartition | None = None):
        part = part or build_partition(u.grid)
        value = besov_morrey_norm(u, spec, part)
        return cls(field_id, spec.s, spec.p, spec.q, spec.r, value, spec.policy.to_dict(),
                   (part.j_min, part.j_max))

    def to_dict(self) -> dict:
        return {
            "field_id": self.field_id,
            "s": self.s,
            "p": self.p,
            "q": self.q,
            "r": "inf" if math.isinf(self.r) else self.r,
            "value": self.value,
            "policy": self.policy,
            "j_range": list(self.j_range),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list:
        d = self.to_dict()
        d["policy"] = json.dumps(self.policy, sort_keys=True)
        d["j_range"] = f"{self.j_range[0]}:{self.j_range[1]}"
        d["value"] = repr(self.value)
        return [d[c] for c in self.CSV_COLUMNS]


def reports_to_csv(reports: Iterable[NormReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(NormReport.CSV_COLUMNS)
    for rep in reports:
        w.writerow(rep.csv_row())
    return buf.getvalue()


def check_grid_match(*fields: _Field):
    grids = {f.grid for f in fields}
    if len(grids) > 1:
        raise IntegrityError(f"fields live on different grids: {grids}")
