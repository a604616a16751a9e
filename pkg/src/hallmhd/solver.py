"""Mild solutions of the extended system by Picard iteration over whole trajectories.

The Duhamel operator

    B(Phi, Psi)(t) = int_0^t exp((t - tau) Delta_{mu,nu}) Pi(Phi, Psi)(tau) dtau

is discretized with the composite trapezoid rule on a uniform node grid and the
exact heat semigroup between nodes.  The sum is accumulated recursively,

    I_k = e^{dt Delta} I_{k-1} + dt/2 (e^{dt Delta} f_{k-1} + f_k),

which equals the O(n^2) double sum term by term.

Both fixed-point constructions (global: Theta = y + B(Theta, Theta); local:
split off the heat flow and iterate the remainder) run in the units with
mu = h = 1 and map the result back, unless ``SolverConfig.normalize`` is off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, IntegrityError
from .field import GridSpec, spectral_tables
from .lp import (
    LPPartition,
    NormSpec,
    SpacetimeNorms,
    band_norms,
    build_partition,
    combine_bands,
    spacetime_from_bands,
)
from .nonlinear import (
    ExtendedState,
    PhysicalParams,
    denormalize_array,
    normalization_factors,
    normalize_array,
    pi_batch,
)

_PI_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States at uniformly spaced times 0 = t_0 < ... < t_n = T.

    ``data`` holds coefficients with shape (nodes, fields, 3, N, N, N); for an
    extended state trajectory ``fields == 3`` (u, B, J).
    """

    times: np.ndarray
    data: np.ndarray = field(repr=False)
    grid: GridSpec

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        data = np.asarray(self.data)
        if times.ndim != 1 or times.size < 2:
            raise ConfigurationError("a trajectory needs at least two time nodes")
        if data.shape[0] != times.size or data.shape[-3:] != self.grid.shape or data.ndim != 6:
            raise IntegrityError(f"data shape {data.shape} does not match times/grid")
        steps = np.diff(times)
        if times[0] != 0 or np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ConfigurationError("trajectory times must be uniform and start at 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_states(cls, times, states) -> "Trajectory":
        states = list(states)
        grids = {s.grid for s in states}
        if len(grids) != 1:
            raise IntegrityError("all trajectory nodes must share one grid")
        return cls(np.asarray(times, float), np.stack([s.as_array() for s in states]), grids.pop())

    @classmethod
    def zeros_like(cls, other: "Trajectory") -> "Trajectory":
        return cls(other.times, np.zeros_like(other.data), other.grid)

    @property
    def n_nodes(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def state(self, k: int) -> ExtendedState:
        return ExtendedState.from_array(self.grid, self.data[k])

    @property
    def states(self) -> list[ExtendedState]:
        return [self.state(k) for k in range(self.n_nodes)]

    def _compatible(self, other: "Trajectory"):
        if other.grid != self.grid:
            raise IntegrityError(f"trajectory grids differ: {self.grid} vs {other.grid}")
        if other.times.shape != self.times.shape or not np.allclose(other.times, self.times, rtol=1e-12):
            raise IntegrityError("trajectory time grids differ")

    def __add__(self, other):
        self._compatible(other)
        return Trajectory(self.times, self.data + other.data, self.grid)

    def __sub__(self, other):
        self._compatible(other)
        return Trajectory(self.times, self.data - other.data, self.grid)

    def __mul__(self, a):
        return Trajectory(self.times, self.data * a, self.grid)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SolverConfig:
    """Settings of one mild-solution computation.

    ``n_steps`` is the number of uniform time steps, so trajectories carry
    ``n_steps + 1`` nodes.  ``delta`` is the smallness threshold used by the
    smallness gates (None: not calibrated).
    """

    params: PhysicalParams = PhysicalParams()
    T: float = 1.0
    n_steps: int = 32
    picard_tol: float = 1e-10
    picard_max_iter: int = 60
    delta: float | None = None
    norm_spec: NormSpec = NormSpec.critical()
    normalize: bool = True
    blowup_factor: float = 10.0

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if self.n_steps < 2:
            raise ConfigurationError(f"n_steps must be >= 2, got {self.n_steps}")
        if not self.picard_tol > 0:
            raise ConfigurationError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ConfigurationError("picard_max_iter must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ConfigurationError("delta must be positive when given")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "T": self.T,
            "n_steps": self.n_steps,
            "picard_tol": self.picard_tol,
            "picard_max_iter": self.picard_max_iter,
            "delta": self.delta,
            "norm_spec": self.norm_spec.to_dict(),
            "normalize": self.normalize,
            "blowup_factor": self.blowup_factor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        if "params" in d:
            d["params"] = PhysicalParams.from_dict(d["params"])
        if "norm_spec" in d:
            d["norm_spec"] = NormSpec.from_dict(d["norm_spec"])
        return cls(**d)


# ---------------------------------------------------------------- norms


def x_norms(traj: Trajectory, spec: NormSpec, part: LPPartition | None = None) -> SpacetimeNorms:
    """Discrete X_p(T)^3 norm of a trajectory (sum over fields)."""
    part = part or build_partition(traj.grid)
    m = band_norms(traj.data, traj.grid, spec, part, component_axes=1)
    return spacetime_from_bands(m, traj.times, spec.s, spec.r, part)


def _x_norm_many(arrays: list[np.ndarray], times, grid, spec, part) -> list[SpacetimeNorms]:
    m = band_norms(np.stack(arrays), grid, spec, part, component_axes=1)
    return [spacetime_from_bands(mi, times, spec.s, spec.r, part) for mi in m]


# ---------------------------------------------------------------- linear pieces


def _heat_factors(grid: GridSpec, kappas, tau: float) -> np.ndarray:
    """exp(-kappa_f tau |xi|^2) stacked per field, shape (3, 1, N, N, N)."""
    k2 = spectral_tables(grid).kmag_sq
    return np.stack([np.exp(-k * tau * k2) for k in kappas])[:, None]


def _heat_array(arr0: np.ndarray, grid: GridSpec, kappas, times) -> np.ndarray:
    k2 = spectral_tables(grid).kmag_sq
    kap = np.asarray(kappas, float)[None, :, None, None, None, None]
    return np.exp(-kap * np.asarray(times)[:, None, None, None, None, None] * k2) * arr0[None]


def heat_trajectory(theta0: ExtendedState, cfg: SolverConfig) -> Trajectory:
    """Linear part: (e^{mu t Lap} u0, e^{nu t Lap} B0, e^{nu t Lap} J0) at every node."""
    times = cfg.times
    data = _heat_array(theta0.as_array(), theta0.grid, cfg.params.diffusivities, times)
    data[0] = theta0.as_array()
    return Trajectory(times, data, theta0.grid)


def _duhamel_array(src: np.ndarray, grid: GridSpec, kappas, dt: float) -> np.ndarray:
    """Trapezoid Duhamel sums for node-sampled sources, shape (nodes, 3, 3, N, N, N)."""
    prop = _heat_factors(grid, kappas, dt)
    out = np.zeros_like(src)
    half = 0.5 * dt
    for k in range(1, src.shape[0]):
        out[k] = prop * (out[k - 1] + half * src[k - 1]) + half * src[k]
    return out


def duhamel_integral(source: Trajectory, params: PhysicalParams) -> Trajectory:
    """int_0^t exp((t - tau) Delta_{mu,nu}) f(tau) dtau for a node-sampled source."""
    if source.data.shape[1] != 3:
        raise ConfigurationError("Duhamel integral expects (u, B, J)-shaped sources")
    data = _duhamel_array(source.data, source.grid, params.diffusivities, source.dt)
    return Trajectory(source.times, data, source.grid)


def _pi_nodes(phi: np.ndarray, psi: np.ndarray, h: float, grid: GridSpec) -> np.ndarray:
    per_node = 40 * 9 * grid.n_per_axis**3 * 16
    chunk = max(1, _PI_CHUNK_BYTES // per_node)
    out = np.empty_like(phi)
    for s in range(0, phi.shape[0], chunk):
        out[s:s + chunk] = pi_batch(phi[s:s + chunk], psi[s:s + chunk], h, grid)
    return out


def _bilinear(phi: np.ndarray, psi: np.ndarray, grid, params: PhysicalParams, dt: float) -> np.ndarray:
    return _duhamel_array(_pi_nodes(phi, psi, params.h, grid), grid, params.diffusivities, dt)


def duhamel_bilinear(phi: Trajectory, psi: Trajectory, cfg: SolverConfig) -> Trajectory:
    """B(Phi, Psi) on the common node grid of the two trajectories."""
    phi._compatible(psi)
    data = _bilinear(phi.data, psi.data, phi.grid, cfg.params, phi.dt)
    return Trajectory(phi.times, data, phi.grid)


# ---------------------------------------------------------------- Picard


class IterateNorms(NamedTuple):
    iter: int
    linf_low: float
    l1_high: float
    l2_mid: float
    x_norm: float
    residual: float  # relative X-norm change from the previous iterate


@dataclass
class PicardResult:
    traj: Trajectory
    iterates: int
    residual: float
    converged: bool
    status: str  # "converged", "max_iter" or "diverged"
    norms: list[IterateNorms]
    ratios: list[float]  # successive-difference contraction ratios
    y_norm: float  # X-norm of the driving term (heat flow or y-tilde)
    solution_norm: float
    thetaL: Trajectory | None = None
    tilde: Trajectory | None = None
    M_emp: float | None = None
    units: str = "physical"

    def series_rows(self) -> list[tuple]:
        return [tuple(n) for n in self.norms]


class _Frame(NamedTuple):
    arr0: np.ndarray
    grid: GridSpec
    params: PhysicalParams
    times: np.ndarray


def _frame(theta0: ExtendedState, cfg: SolverConfig) -> _Frame:
    arr0 = theta0.as_array()
    if cfg.normalize and not cfg.params.is_normalized:
        arr, grid, params = normalize_array(arr0, theta0.grid, cfg.params)
        tscale = normalization_factors(cfg.params)["time"]
        return _Frame(arr, grid, params, cfg.times * tscale)
    return _Frame(arr0, theta0.grid, cfg.params, cfg.times)


def _unframe(arr: np.ndarray, frame: _Frame, theta0: ExtendedState, cfg: SolverConfig) -> Trajectory:
    if frame.grid != theta0.grid:
        arr, _ = denormalize_array(arr, frame.grid, cfg.params)
    return Trajectory(cfg.times, arr, theta0.grid)


def _iterate(step, y: np.ndarray, start: np.ndarray, frame: _Frame, cfg: SolverConfig, part):
    """Generic fixed-point loop x <- step(x); returns (x, norms, ratios, status, y_norm)."""
    spec = cfg.norm_spec
    y_norm = _x_norm_many([y], frame.times, frame.grid, spec, part)[0].x_norm
    norms: list[IterateNorms] = []
    ratios: list[float] = []
    x = start
    prev_diff = None
    status = "max_iter"
    for it in range(1, cfg.picard_max_iter + 1):
        new = step(x)
        n_new, n_diff = _x_norm_many([new, new - x], frame.times, frame.grid, spec, part)
        rel = n_diff.x_norm / n_new.x_norm if n_new.x_norm > 0 else 0.0
        norms.append(IterateNorms(it, n_new.linf_low, n_new.l1_high, n_new.l2_mid, n_new.x_norm, rel))
        if prev_diff is not None and prev_diff > 0:
            ratios.append(n_diff.x_norm / prev_diff)
        prev_diff = n_diff.x_norm
        x = new
        if not np.isfinite(n_new.x_norm) or n_new.x_norm > cfg.blowup_factor * max(y_norm, 1e-300) and y_norm > 0:
            status = "diverged"
            break
        if rel < cfg.picard_tol or n_diff.x_norm == 0:
            status = "converged"
            break
    return x, norms, ratios, status, y_norm


def picard_global(theta0: ExtendedState, cfg: SolverConfig) -> PicardResult:
    """Iterate Theta <- y + B(Theta, Theta) from Theta = y (the heat flow)."""
    frame = _frame(theta0, cfg)
    part = build_partition(frame.grid)
    kap = frame.params.diffusivities
    dt = frame.times[1] - frame.times[0]
    y = _heat_array(frame.arr0, frame.grid, kap, frame.times)
    y[0] = frame.arr0

    def step(x):
        return y + _bilinear(x, x, frame.grid, frame.params, dt)

    x, norms, ratios, status, y_norm = _iterate(step, y, y, frame, cfg, part)
    resid_arr = x - y - _bilinear(x, x, frame.grid, frame.params, dt)
    n_x, n_res = _x_norm_many([x, resid_arr], frame.times, frame.grid, cfg.norm_spec, part)
    residual = n_res.x_norm / n_x.x_norm if n_x.x_norm > 0 else 0.0
    return PicardResult(
        traj=_unframe(x, frame, theta0, cfg),
        iterates=len(norms),
        residual=residual,
        converged=status == "converged",
        status=status,
        norms=norms,
        ratios=ratios,
        y_norm=y_norm,
        solution_norm=n_x.x_norm,
        units="normalized" if frame.grid != theta0.grid else "physical",
    )


def picard_local(theta0: ExtendedState, cfg: SolverConfig) -> PicardResult:
    """Split Theta = Theta^L + Theta~ and iterate Theta~ <- y~ + L(Theta~) + B(Theta~, Theta~)."""
    frame = _frame(theta0, cfg)
    part = build_partition(frame.grid)
    kap = frame.params.diffusivities
    dt = frame.times[1] - frame.times[0]
    g, prm = frame.grid, frame.params
    lin = _heat_array(frame.arr0, g, kap, frame.times)
    lin[0] = frame.arr0
    pi_ll = _pi_nodes(lin, lin, prm.h, g)
    y_tilde = _duhamel_array(pi_ll, g, kap, dt)

    def linear_op(x):
        return _duhamel_array(_pi_nodes(x, lin, prm.h, g) + _pi_nodes(lin, x, prm.h, g), g, kap, dt)

    def step(x):
        src = pi_ll + _pi_nodes(x, lin, prm.h, g) + _pi_nodes(lin, x, prm.h, g) + _pi_nodes(x, x, prm.h, g)
        return _duhamel_array(src, g, kap, dt)

    x, norms, ratios, status, y_norm = _iterate(step, y_tilde, np.zeros_like(y_tilde), frame, cfg, part)
    full = lin + x
    resid_arr = full - lin - _bilinear(full, full, g, prm, dt)
    n_full, n_res, n_x, n_lx = _x_norm_many([full, resid_arr, x, linear_op(x)], frame.times, g,
                                            cfg.norm_spec, part)
    residual = n_res.x_norm / n_full.x_norm if n_full.x_norm > 0 else 0.0
    m_emp = n_lx.x_norm / n_x.x_norm if n_x.x_norm > 0 else 0.0
    return PicardResult(
        traj=_unframe(full, frame, theta0, cfg),
        iterates=len(norms),
        residual=residual,
        converged=status == "converged",
        status=status,
        norms=norms,
        ratios=ratios,
        y_norm=y_norm,
        solution_norm=n_full.x_norm,
        thetaL=_unframe(lin, frame, theta0, cfg),
        tilde=_unframe(x, frame, theta0, cfg),
        M_emp=m_emp,
        units="normalized" if frame.grid != theta0.grid else "physical",
    )


# ---------------------------------------------------------------- reference integrator


def march_reference(theta0: ExtendedState, cfg: SolverConfig, nonlinear: bool = True) -> Trajectory:
    """First-order exponential time differencing in the original units.

    Theta_{k+1} = e^{dt Delta}(Theta_k + dt Pi(Theta_k, Theta_k)).
    """
    g = theta0.grid
    times = cfg.times
    dt = times[1] - times[0]
    prop = _heat_factors(g, cfg.params.diffusivities, dt)
    data = np.empty((times.size,) + theta0.as_array().shape, dtype=np.complex128)
    data[0] = theta0.as_array()
    for k in range(1, times.size):
        cur = data[k - 1]
        if nonlinear:
            cur = cur + dt * pi_batch(cur, cur, cfg.params.h, g)
        data[k] = prop * cur
    return Trajectory(times, data, g)


# ---------------------------------------------------------------- smallness gates


def _gate(value: float, threshold: float | None, margin: float) -> str:
    if threshold is None:
        return "uncalibrated"
    if threshold <= 0:
        return "no-go"
    ratio = value / threshold
    if ratio < 1 - margin:
        return "go"
    if ratio <= 1 + margin:
        return "marginal"
    return "no-go"


@dataclass
class SmallnessReport:
    u0_norm: float
    b0_norm: float
    hj0_norm: float
    delta: float | None
    K_emp: float
    M_emp: float
    y_norm: float
    radius: float  # (1 - M)^2 / (4 K)
    global_radius: float  # 1 / (4 K)
    picard_gate: str  # ||y||_X against 1 / (4 K)
    local_gate: str  # h ||J0|| < delta
    global_gate: str  # ||u0|| + ||B0|| + h ||J0|| < delta
    units: str = "normalized"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def initial_norms(theta0: ExtendedState, cfg: SolverConfig) -> tuple[float, float, float]:
    """||u0||, ||B0||, h ||J0|| in the critical norm, evaluated in normalized units."""
    frame = _frame(theta0, cfg)
    part = build_partition(frame.grid)
    spec = cfg.norm_spec
    m = band_norms(frame.arr0, frame.grid, spec, part, component_axes=1)
    vals = combine_bands(m, spec.s, spec.r, part)
    return float(vals[0]), float(vals[1]), float(frame.params.h * vals[2])


def smallness_report(theta0: ExtendedState, cfg: SolverConfig, K_emp: float, margin: float = 0.05) -> SmallnessReport:
    """Norms of the data against the measured Picard radius and the smallness gates.

    ``K_emp`` comes from :func:`hallmhd.verification.contraction_probe`; it
    must be measured in normalized units with the same T and node count.
    """
    if not K_emp > 0:
        raise ConfigurationError("K_emp must be positive")
    u0, b0, hj0 = initial_norms(theta0, cfg)
    frame = _frame(theta0, cfg)
    part = build_partition(frame.grid)
    kap = frame.params.diffusivities
    dt = frame.times[1] - frame.times[0]
    lin = _heat_array(frame.arr0, frame.grid, kap, frame.times)
    lin[0] = frame.arr0
    n_y = _x_norm_many([lin], frame.times, frame.grid, cfg.norm_spec, part)[0].x_norm
    if n_y > 0:
        h = frame.params.h
        lx = _duhamel_array(_pi_nodes(lin, lin, h, frame.grid) * 2, frame.grid, kap, dt)
        m_emp = _x_norm_many([lx], frame.times, frame.grid, cfg.norm_spec, part)[0].x_norm / n_y
    else:
        m_emp = 0.0
    global_radius = 1.0 / (4.0 * K_emp)
    radius = (1.0 - m_emp) ** 2 / (4.0 * K_emp) if m_emp < 1 else 0.0
    return SmallnessReport(
        u0_norm=u0,
        b0_norm=b0,
        hj0_norm=hj0,
        delta=cfg.delta,
        K_emp=K_emp,
        M_emp=m_emp,
        y_norm=n_y,
        radius=radius,
        global_radius=global_radius,
        picard_gate=_gate(n_y, global_radius, margin),
        local_gate=_gate(hj0, cfg.delta, margin),
        global_gate=_gate(u0 + b0 + hj0, cfg.delta, margin),
    )


def calibrate_delta(theta0: ExtendedState, cfg: SolverConfig, hi: float = 64.0,
                    rounds: int = 12) -> tuple[float, float]:
    """Bisect the amplitude factor at which picard_global stops converging.

    Returns (critical factor, delta) with delta = 0.5 x the data norm
    ||u0|| + ||B0|| + h ||J0|| at the critical factor.
    """
    if not np.any(theta0.as_array()):
        raise ConfigurationError("cannot calibrate on zero data")

    def ok(a: float) -> bool:
        return picard_global(theta0 * a, cfg).converged

    if ok(hi):
        raise ConfigurationError(f"picard_global still converges at amplitude factor {hi}")
    lo = hi
    while not ok(lo):
        hi, lo = lo, lo / 4
        if lo < 1e-8:
            raise ConfigurationError("picard_global does not converge even for tiny data")
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    u0, b0, hj0 = initial_norms(theta0 * lo, cfg)
    return lo, 0.5 * (u0 + b0 + hj0)
