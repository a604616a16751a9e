"""Empirical constants, structural invariants and stability probes.

Every routine here is deterministic given its seed: samples use independent
substreams spawned from the master seed and reductions run in a fixed order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import random_divfree, random_state, substreams
from .errors import ConfigurationError, IntegrityError
from .field import (
    GridSpec,
    VectorField,
    _curl,
    _dealias,
    _to_phys,
    _to_spec,
    curl_inv,
    spectral_tables,
    tensor_divergence,
)
from .lp import (
    LPPartition,
    NormSpec,
    band_norms,
    build_partition,
    combine_bands,
    spacetime_from_bands,
)
from .nonlinear import ExtendedState
from .solver import (
    SolverConfig,
    Trajectory,
    _bilinear,
    _duhamel_array,
    _frame,
    _heat_array,
    _x_norm_many,
    picard_global,
)


class Lemma(str, enum.Enum):
    DIV_VW = "DIV_VW"
    DIV_CURLINV_W = "DIV_CURLINV_W"
    DIV_V_CURLINV = "DIV_V_CURLINV"
    ALGEBRA = "ALGEBRA"
    HEAT = "HEAT"
    DUHAMEL = "DUHAMEL"
    INTERP = "INTERP"


@dataclass
class EstimateReport:
    lemma_id: str
    samples: int  # non-degenerate samples that entered the maximum
    max_ratio: float
    grid: GridSpec
    spec: NormSpec
    seed: int
    skipped: int = 0
    ratios: list[float] = field(default_factory=list, repr=False)
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "samples": self.samples,
            "skipped": self.skipped,
            "max_ratio": self.max_ratio,
            "grid": self.grid.to_dict(),
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "options": dict(self.options),
        }

    def summary_row(self) -> list:
        return [self.lemma_id, repr(self.max_ratio), self.grid.n_per_axis, repr(self.grid.box_length),
                self.spec.p, self.spec.q, self.spec.r, self.samples, self.seed]


SUMMARY_HEADER = ["lemma_id", "max_ratio", "n_per_axis", "box_length", "p", "q", "r", "n_samples", "seed"]


def _norms(arr: np.ndarray, grid: GridSpec, spec: NormSpec, part: LPPartition, s_values, component_axes=1):
    """Besov-Morrey norms of ``arr`` for several regularity indices from one band pass."""
    m = band_norms(arr, grid, spec, part, component_axes=component_axes)
    return [combine_bands(m, s, spec.r, part) for s in s_values]


def _product_tensor(v: VectorField, w: VectorField) -> np.ndarray:
    """Dealiased coefficients of v (x) w, shape (3, 3, N, N, N)."""
    g = v.grid
    vp, wp = _to_phys(v.coeffs, g), _to_phys(w.coeffs, g)
    return _dealias(_to_spec(vp[:, None] * wp[None, :], g), spectral_tables(g))


def _ratio(num: float, den: float) -> float | None:
    if not den > 0 or not math.isfinite(den):
        return None
    return num / den


def lemma_ratio(lemma: Lemma | str, v: VectorField, w: VectorField, spec: NormSpec,
                part: LPPartition | None = None) -> float | None:
    """LHS / RHS of one product estimate at the critical index s0 = 3/p.

    DIV_VW:         ||div(v (x) w)||_{s0-1} / (||v||_{s0} ||w||_{s0})
    DIV_CURLINV_W:  ||div(curl^-1 v (x) w)||_{s0} / (||v||_{s0-1} ||w||_{s0-1} ||v||_{s0+1} ||w||_{s0+1})^(1/2)
    DIV_V_CURLINV:  ||div(v (x) curl^-1 w)||_{s0} / (||v||_{s0+1} ||w||_{s0-1})
    ALGEBRA:        ||v (x) w||_{s0} / (||v||_{s0} ||w||_{s0})

    Returns None for a degenerate sample (vanishing denominator).
    """
    lemma = Lemma(lemma)
    g = v.grid
    part = part or build_partition(g)
    s0 = 3.0 / spec.p
    lo, mid, hi = _norms(np.stack([v.coeffs, w.coeffs]), g, spec, part, (s0 - 1, s0, s0 + 1))
    if lemma is Lemma.ALGEBRA:
        (num,) = _norms(_product_tensor(v, w), g, spec, part, (s0,), component_axes=2)
        return _ratio(float(num), mid[0] * mid[1])
    if lemma is Lemma.DIV_VW:
        (num,) = _norms(tensor_divergence(v, w).coeffs, g, spec, part, (s0 - 1,))
        return _ratio(float(num), mid[0] * mid[1])
    if lemma is Lemma.DIV_CURLINV_W:
        (num,) = _norms(tensor_divergence(curl_inv(v), w).coeffs, g, spec, part, (s0,))
        return _ratio(float(num), math.sqrt(lo[0] * lo[1] * hi[0] * hi[1]))
    if lemma is Lemma.DIV_V_CURLINV:
        (num,) = _norms(tensor_divergence(v, curl_inv(w)).coeffs, g, spec, part, (s0,))
        return _ratio(float(num), hi[0] * lo[1])
    raise ConfigurationError(f"{lemma.value} is a space-time lemma; use a trajectory ratio")


def heat_ratio(u0: VectorField, spec: NormSpec, T: float = 1.0, n_steps: int = 32,
               part: LPPartition | None = None) -> float | None:
    """(||y||_{L^inf N^s} + ||y||_{L^1 N^{s+2}}) / ||u0||_{N^s} for y = e^{t Lap} u0."""
    g = u0.grid
    part = part or build_partition(g)
    times = np.linspace(0.0, T, n_steps + 1)
    y = _heat_array(u0.coeffs[None], g, (1.0,), times)
    st = spacetime_from_bands(band_norms(y, g, spec, part, component_axes=1), times, spec.s, spec.r, part)
    (n0,) = _norms(u0.coeffs, g, spec, part, (spec.s,))
    return _ratio(st.x_norm, float(n0))


def duhamel_ratio(f: VectorField, spec: NormSpec, T: float = 1.0, n_steps: int = 32,
                  part: LPPartition | None = None) -> float | None:
    """||z||_X / ||f||_{L^1 N^s} for z = int_0^t e^{(t-tau) Lap} f(tau) dtau.

    The source is f(tau) = cos(pi tau / (2T)) f, so it is smooth in time but
    not constant.
    """
    g = f.grid
    part = part or build_partition(g)
    times = np.linspace(0.0, T, n_steps + 1)
    src = np.cos(0.5 * math.pi * times / T)[:, None, None, None, None, None] * f.coeffs[None, None]
    z = _duhamel_array(src, g, (1.0,), times[1] - times[0])
    st = spacetime_from_bands(band_norms(z, g, spec, part, component_axes=1), times, spec.s, spec.r, part)
    m = band_norms(src, g, spec, part, component_axes=1)
    f_norms = combine_bands(m, spec.s, spec.r, part)[:, 0]
    l1 = float(np.sum(0.5 * (f_norms[1:] + f_norms[:-1]) * np.diff(times)))
    return _ratio(st.x_norm, l1)


def interp_ratio(u0: VectorField, spec: NormSpec, T: float = 1.0, n_steps: int = 32,
                 part: LPPartition | None = None) -> float | None:
    """l2_mid^2 / (linf_low l1_high) on the heat flow from ``u0``."""
    g = u0.grid
    part = part or build_partition(g)
    times = np.linspace(0.0, T, n_steps + 1)
    y = _heat_array(u0.coeffs[None], g, (1.0,), times)
    st = spacetime_from_bands(band_norms(y, g, spec, part, component_axes=1), times, spec.s, spec.r, part)
    return _ratio(st.l2_mid**2, st.linf_low * st.l1_high)


_PAIR_LEMMAS = {Lemma.DIV_VW, Lemma.DIV_CURLINV_W, Lemma.DIV_V_CURLINV, Lemma.ALGEBRA}


def estimate_constant(lemma_id: Lemma | str, n_samples: int, grid: GridSpec, spec: NormSpec | None = None,
                      seed: int = 0, alpha: float = 2.0, k_cut: float | None = 2, T: float = 1.0,
                      n_steps: int = 32, keep_ratios: bool = False) -> EstimateReport:
    """Maximum LHS/RHS ratio of one lemma over seeded random divergence-free samples.

    The default ``k_cut=2`` keeps every quadratic product inside the dealiasing
    sphere of a 16^3 grid, so the samples are the same continuum fields on every
    grid used for refinement.  For the space-time lemmas ``spec.s`` is the
    lower regularity index.
    """
    lemma = Lemma(lemma_id)
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    spec = spec or NormSpec.critical()
    part = build_partition(grid)
    ratios: list[float] = []
    skipped = 0
    for rng in substreams(seed, n_samples):
        v = random_divfree(grid, rng, alpha, k_cut)
        if lemma in _PAIR_LEMMAS:
            w = random_divfree(grid, rng, alpha, k_cut)
            r = lemma_ratio(lemma, v, w, spec, part)
        elif lemma is Lemma.HEAT:
            r = heat_ratio(v, spec, T, n_steps, part)
        elif lemma is Lemma.DUHAMEL:
            r = duhamel_ratio(v, spec, T, n_steps, part)
        else:
            r = interp_ratio(v, spec, T, n_steps, part)
        if r is None:
            skipped += 1
        else:
            ratios.append(float(r))
    max_ratio = max(ratios) if ratios else 0.0
    if not math.isfinite(max_ratio):
        raise IntegrityError(f"{lemma.value}: non-finite ratio")
    opts = {"alpha": alpha, "k_cut": k_cut}
    if lemma not in _PAIR_LEMMAS:
        opts.update(T=T, n_steps=n_steps)
    return EstimateReport(lemma.value, len(ratios), max_ratio, grid, spec, seed, skipped,
                          ratios if keep_ratios else [], opts)


# ---------------------------------------------------------------- invariants


def check_j_consistency(traj: Trajectory, spec: NormSpec | None = None, eps: float = 1e-300) -> np.ndarray:
    """e(t_k) = ||curl B - J||_{N^{3/p-2}} / max(||J||_{N^{3/p-2}}, eps) at every node."""
    spec = spec or NormSpec.critical()
    g = traj.grid
    t = spectral_tables(g)
    b, j = traj.data[:, 1], traj.data[:, 2]
    stack = np.stack([_curl(b, t) - j, j], axis=1)
    part = build_partition(g)
    (vals,) = _norms(stack, g, spec, part, (3.0 / spec.p - 2.0,), component_axes=1)
    return vals[:, 0] / np.maximum(vals[:, 1], eps)


@dataclass
class ScalingReport:
    lam: float
    mode: str
    residual_original: float
    residual_rescaled: float
    covariant: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rescale_trajectory(traj: Trajectory, lam: float = 2.0) -> Trajectory:
    """Theta -> lam Theta(lam x, lam^2 t) realized on the box L / lam with the same node count."""
    if lam <= 1 or not float(math.log2(lam)).is_integer():
        raise ConfigurationError(f"lambda must be a power of two > 1, got {lam}")
    grid = traj.grid.with_box_length(traj.grid.box_length / lam)
    return Trajectory(traj.times / lam**2, traj.data * lam, grid)


def integral_residual(traj: Trajectory, cfg: SolverConfig, mode: str = "mild",
                      part: LPPartition | None = None) -> float:
    """||Theta - e^{t Delta} Theta_0 [- B(Theta, Theta)]||_X / ||Theta||_X in the trajectory's own units."""
    if mode not in ("mild", "heat"):
        raise ConfigurationError(f"unknown residual mode {mode!r}")
    g = traj.grid
    part = part or build_partition(g)
    y = _heat_array(traj.data[0], g, cfg.params.diffusivities, traj.times)
    y[0] = traj.data[0]
    res = traj.data - y
    if mode == "mild":
        res = res - _bilinear(traj.data, traj.data, g, cfg.params, traj.dt)
    n_x, n_res = _x_norm_many([traj.data, res], traj.times, g, cfg.norm_spec, part)
    if n_x.x_norm == 0:
        return 0.0 if n_res.x_norm == 0 else math.inf
    return n_res.x_norm / n_x.x_norm


def check_scaling(traj: Trajectory, cfg: SolverConfig, lam: float = 2.0, mode: str = "mild",
                  factor: float = 10.0) -> ScalingReport:
    """Integral-equation residual before and after the scaling map.

    ``mode="heat"`` measures the distance to the heat flow only.  The
    rescaled residual must stay within ``factor`` times the original one
    (plus a 1e-14 roundoff floor).
    """
    res0 = integral_residual(traj, cfg, mode)
    res1 = integral_residual(rescale_trajectory(traj, lam), cfg, mode)
    return ScalingReport(lam, mode, res0, res1, bool(res1 <= factor * res0 + 1e-14))


# ---------------------------------------------------------------- probes


def _state_norm_sum(theta: ExtendedState, spec: NormSpec, h: float) -> float:
    part = build_partition(theta.grid)
    (vals,) = _norms(theta.as_array(), theta.grid, spec, part, (spec.s,))
    return float(vals[0] + vals[1] + h * vals[2])


@dataclass
class UniquenessReport:
    epsilons: list[float]
    ratios: list[float]
    status: str  # "ok" or "aborted"
    base_residual: float
    spread: float  # max ratio / min ratio over the nonzero epsilons

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def uniqueness_probe(theta0: ExtendedState, cfg: SolverConfig, epsilons=(1e-2, 1e-3, 1e-4), seed: int = 0,
                     perturbation: ExtendedState | None = None, k_cut: float | None = 2,
                     tol: float = 1e-10) -> UniquenessReport:
    """Response ||Theta_eps - Theta_0||_{L^inf N^{3/p-1}} / eps to a consistent perturbation.

    The perturbation is a seeded random state with J = curl B, scaled so that
    ||u|| + ||B|| + h ||J|| = 1 in the critical norm.
    """
    if not theta0.is_consistent(tol):
        raise IntegrityError("initial data must satisfy J = curl B")
    if perturbation is None:
        perturbation = random_state(theta0.grid, substreams(seed, 1)[0], k_cut=k_cut)
    elif not perturbation.is_consistent(tol):
        raise IntegrityError("perturbation must satisfy J = curl B")
    size = _state_norm_sum(perturbation, cfg.norm_spec, cfg.params.h)
    if size > 0:
        perturbation = perturbation * (1.0 / size)
    base = picard_global(theta0, cfg)
    if not base.converged:
        return UniquenessReport(list(epsilons), [], "aborted", base.residual, math.nan)
    part = build_partition(theta0.grid)
    ratios = []
    for eps in epsilons:
        run = picard_global(theta0 + perturbation * eps, cfg)
        if not run.converged:
            return UniquenessReport(list(epsilons), ratios, "aborted", base.residual, math.nan)
        diff = run.traj.data - base.traj.data
        if eps == 0:
            ratios.append(0.0 if not np.any(diff) else math.inf)
            continue
        st = _x_norm_many([diff], cfg.times, theta0.grid, cfg.norm_spec, part)[0]
        ratios.append(st.linf_low / eps)
    nonzero = [r for e, r in zip(epsilons, ratios) if e != 0]
    spread = max(nonzero) / min(nonzero) if nonzero and min(nonzero) > 0 else math.nan
    return UniquenessReport(list(epsilons), ratios, "ok", base.residual, spread)


@dataclass
class ContractionReport:
    K_emp: float
    radius: float  # 1 / (4 K_emp)
    samples: int
    skipped: int
    seed: int
    T: float
    n_steps: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def contraction_probe(cfg: SolverConfig, grid: GridSpec, n_samples: int = 8, seed: int = 0,
                      k_cut: float | None = 2, alpha: float = 2.0) -> ContractionReport:
    """K_emp = max ||B(Phi, Psi)||_X / (||Phi||_X ||Psi||_X) over heat flows of random consistent data.

    Measured in the normalized frame the solvers iterate in, so the radius is
    directly comparable with ``PicardResult.y_norm``.
    """
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    best = 0.0
    skipped = 0
    for rng in substreams(seed, n_samples):
        a = random_state(grid, rng, alpha, k_cut)
        b = random_state(grid, rng, alpha, k_cut)
        fa, fb = _frame(a, cfg), _frame(b, cfg)
        g, prm, times = fa.grid, fa.params, fa.times
        part = build_partition(g)
        phi = _heat_array(fa.arr0, g, prm.diffusivities, times)
        psi = _heat_array(fb.arr0, g, prm.diffusivities, times)
        out = _bilinear(phi, psi, g, prm, times[1] - times[0])
        n_phi, n_psi, n_out = _x_norm_many([phi, psi, out], times, g, cfg.norm_spec, part)
        r = _ratio(n_out.x_norm, n_phi.x_norm * n_psi.x_norm)
        if r is None:
            skipped += 1
        else:
            best = max(best, r)
    radius = 1.0 / (4.0 * best) if best > 0 else math.inf
    return ContractionReport(best, radius, n_samples - skipped, skipped, seed, cfg.T, cfg.n_steps)


def scale_to_y_norm(theta0: ExtendedState, cfg: SolverConfig, target: float) -> ExtendedState:
    """Rescale data so that its heat flow has X-norm ``target`` in the normalized frame."""
    fr = _frame(theta0, cfg)
    y = _heat_array(fr.arr0, fr.grid, fr.params.diffusivities, fr.times)
    n = _x_norm_many([y], fr.times, fr.grid, cfg.norm_spec, build_partition(fr.grid))[0].x_norm
    if n == 0:
        raise ConfigurationError("cannot rescale zero data")
    return theta0 * (target / n)


__all__ = [
    "Lemma",
    "EstimateReport",
    "SUMMARY_HEADER",
    "lemma_ratio",
    "heat_ratio",
    "duhamel_ratio",
    "interp_ratio",
    "estimate_constant",
    "check_j_consistency",
    "ScalingReport",
    "rescale_trajectory",
    "integral_residual",
    "check_scaling",
    "UniquenessReport",
    "uniqueness_probe",
    "ContractionReport",
    "contraction_probe",
    "scale_to_y_norm",
]
