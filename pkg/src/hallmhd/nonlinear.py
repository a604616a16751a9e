"""Quadratic terms of the extended Hall-MHD system in the unknowns (u, B, J).

With ``Delta_{mu,nu} = diag(mu, nu, nu) Delta`` the system reads
``d/dt Theta - Delta_{mu,nu} Theta = Pi(Theta, Theta)`` where::

    Pi(Phi, Psi) = ( Pi_a(Phi2, Psi2) - Pi_a(Phi1, Psi1),
                     Pi_b(Phi2, h Psi3 - Psi1),
                     curl Pi_b(curl^-1 Phi3, h Psi3 - Psi1) )

    Pi_a(v, w) = 1/2 P (div(v (x) w) + div(w (x) v))
    Pi_b(v, w) = div(v (x) w) - div(w (x) v)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IntegrityError
from .field import (
    GridSpec,
    VectorField,
    _cross,
    _curl,
    _curl_inv,
    _dealias,
    _div,
    _leray,
    _to_phys,
    _to_spec,
    cross_product,
    curl,
    curl_inv,
    laplacian,
    leray_project,
    spectral_tables,
    tensor_divergence,
)

FIELD_NAMES = ("u", "b", "j")


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity mu, resistivity nu and Hall intensity h."""

    mu: float = 1.0
    nu: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        for name in ("mu", "nu", "h"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be strictly positive, got {v}")
            object.__setattr__(self, name, float(v))

    @property
    def diffusivities(self) -> tuple[float, float, float]:
        return (self.mu, self.nu, self.nu)

    @property
    def is_normalized(self) -> bool:
        return self.mu == 1.0 and self.h == 1.0

    def normalized(self) -> "PhysicalParams":
        return PhysicalParams(1.0, self.nu / self.mu, 1.0)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "nu": self.nu, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalParams":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """The triple Theta = (u, B, J) at one instant."""

    u: VectorField
    b: VectorField
    j: VectorField

    def __post_init__(self):
        if not (self.u.grid == self.b.grid == self.j.grid):
            raise IntegrityError("u, B and J must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @property
    def fields(self) -> tuple[VectorField, VectorField, VectorField]:
        return (self.u, self.b, self.j)

    def as_array(self) -> np.ndarray:
        """Coefficients stacked as (3 fields, 3 components, N, N, N)."""
        return np.stack([f.coeffs for f in self.fields])

    @classmethod
    def from_array(cls, grid: GridSpec, arr: np.ndarray) -> "ExtendedState":
        return cls(*(VectorField._wrap(grid, arr[i]) for i in range(3)))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ExtendedState":
        z = VectorField.zeros(grid)
        return cls(z, z, z)

    @classmethod
    def from_ub(cls, u: VectorField, b: VectorField) -> "ExtendedState":
        """State with the consistent current J = curl B."""
        return cls(u, b, curl(b))

    def __add__(self, other):
        return ExtendedState(*(a + b for a, b in zip(self.fields, other.fields)))

    def __sub__(self, other):
        return ExtendedState(*(a - b for a, b in zip(self.fields, other.fields)))

    def __mul__(self, a):
        return ExtendedState(*(f * a for f in self.fields))

    __rmul__ = __mul__

    def divergence_defect(self) -> float:
        """Largest |div| relative to the largest |grad|-scale of the fields."""
        t = spectral_tables(self.grid)
        arr = self.as_array()
        num = np.max(np.abs(_div(arr, t)))
        den = np.max(np.sqrt(t.xi_sq) * np.abs(arr)) if arr.size else 0.0
        return float(num / den) if den > 0 else 0.0

    def mean_defect(self) -> float:
        arr = self.as_array()
        scale = np.max(np.abs(arr))
        return float(np.max(np.abs(arr[:, :, 0, 0, 0])) / scale) if scale > 0 else 0.0

    def current_defect(self) -> float:
        """||curl B - J||_2 / ||J||_2 (0 when both vanish)."""
        diff = (curl(self.b) - self.j).l2_norm()
        ref = self.j.l2_norm()
        if ref == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / ref

    def validate(self, tol: float = 1e-10) -> "ExtendedState":
        if self.divergence_defect() > tol:
            raise IntegrityError(f"state is not divergence-free (defect {self.divergence_defect():.2e})")
        if self.mean_defect() > tol:
            raise IntegrityError("state components must be mean-free")
        return self

    def is_consistent(self, tol: float = 1e-10) -> bool:
        return self.current_defect() <= tol


# ---------------------------------------------------------------- public bilinear maps


def pi_a(v: VectorField, w: VectorField) -> VectorField:
    """Symmetrized, Leray-projected transport term."""
    s = tensor_divergence(v, w) + tensor_divergence(w, v)
    return leray_project(0.5 * s)


def pi_b(v: VectorField, w: VectorField) -> VectorField:
    """Antisymmetric induction term div(v (x) w) - div(w (x) v) = curl(v x w)."""
    return tensor_divergence(v, w) - tensor_divergence(w, v)


def extended_rhs(phi: ExtendedState, psi: ExtendedState, params: PhysicalParams) -> ExtendedState:
    """Pi(Phi, Psi) assembled from the public bilinear maps."""
    w = params.h * psi.j - psi.u
    first = pi_a(phi.b, psi.b) - pi_a(phi.u, psi.u)
    second = leray_project(pi_b(phi.b, w))
    third = leray_project(curl(pi_b(curl_inv(phi.j), w)))
    return ExtendedState(first, second, third)


def linear_part(theta: ExtendedState, params: PhysicalParams) -> ExtendedState:
    """Delta_{mu,nu} Theta."""
    return ExtendedState(*(k * laplacian(f) for k, f in zip(params.diffusivities, theta.fields)))


# ---------------------------------------------------------------- batched kernel


def pi_batch(phi: np.ndarray, psi: np.ndarray, h: float, grid: GridSpec) -> np.ndarray:
    """Pi on stacked coefficient arrays of shape (..., 3, 3, N, N, N).

    Same operator as :func:`extended_rhs`; the induction terms use the
    equivalent curl-of-cross-product form, which needs three transforms
    instead of nine.
    """
    t = spectral_tables(grid)
    P = _to_phys(phi, grid)
    S = _to_phys(psi, grid)
    u1, b1 = P[..., 0, :, :, :, :], P[..., 1, :, :, :, :]
    u2, b2, j2 = S[..., 0, :, :, :, :], S[..., 1, :, :, :, :], S[..., 2, :, :, :, :]
    c = _to_phys(_curl_inv(phi[..., 2, :, :, :, :], t), grid)
    w = h * j2 - u2

    sym = 0.5 * (
        b1[..., :, None, :, :, :] * b2[..., None, :, :, :, :]
        + b2[..., :, None, :, :, :] * b1[..., None, :, :, :, :]
        - u1[..., :, None, :, :, :] * u2[..., None, :, :, :, :]
        - u2[..., :, None, :, :, :] * u1[..., None, :, :, :, :]
    )
    sym_hat = _dealias(_to_spec(sym, grid), t)
    first = _leray(1j * np.sum(t.xi[None] * sym_hat, axis=-4), t)

    crosses = np.stack([_cross(b1, w), _cross(c, w)], axis=-5)
    cross_hat = _dealias(_to_spec(crosses, grid), t)
    second = _leray(_curl(cross_hat[..., 0, :, :, :, :], t), t)
    third = _leray(_curl(_curl(cross_hat[..., 1, :, :, :, :], t), t), t)
    return np.stack([first, second, third], axis=-5)


# ---------------------------------------------------------------- original formulation


def _advection(u: VectorField) -> VectorField:
    """(u . grad) u by pointwise products of u with its spectral gradient, dealiased."""
    g = u.grid
    t = spectral_tables(g)
    up = _to_phys(u.coeffs, g)
    grad_u = _to_phys(1j * t.xi[None, :] * u.coeffs[:, None], g)  # [i, k] = d_k u_i
    adv = np.einsum("kxyz,ikxyz->ixyz", up, grad_u)
    return VectorField._wrap(g, _dealias(_to_spec(adv, g), t))


def _relative(res: VectorField, *terms: VectorField) -> float:
    scale = max(f.l2_norm() for f in terms)
    r = res.l2_norm()
    if scale == 0:
        return 0.0 if r == 0 else math.inf
    return r / scale


def original_rhs_residual(theta: ExtendedState, dtheta: ExtendedState, params: PhysicalParams) -> float:
    """Residual of the (u, B) Hall-MHD equations for a supplied time derivative.

    Momentum (pressure eliminated by projection)::

        du/dt + P((u . grad) u) - mu Lap u - P((curl B) x B)

    Induction::

        dB/dt - curl((u - h curl B) x B) - nu Lap B

    Returns the larger of the two relative L^2 residuals.  Only the u and B
    slots of ``dtheta`` are used; the current is recomputed from B.
    """
    u, b = theta.u, theta.b
    jb = curl(b)
    adv = leray_project(_advection(u))
    lorentz = leray_project(cross_product(jb, b))
    visc = params.mu * laplacian(u)
    res_u = dtheta.u + adv - visc - lorentz
    induction = curl(cross_product(u - params.h * jb, b))
    resist = params.nu * laplacian(b)
    res_b = dtheta.b - induction - resist
    return max(
        _relative(res_u, dtheta.u, adv, visc, lorentz),
        _relative(res_b, dtheta.b, induction, resist),
    )


# ---------------------------------------------------------------- normalization


def normalization_factors(params: PhysicalParams) -> dict:
    """Scalings of the map to mu = h = 1.

    A solution with coefficients (mu, nu, h) maps to one with (1, nu/mu, 1) via
    x -> x / h, t -> mu t / h^2, (u, B) -> (h/mu)(u, B), J -> (h^2/mu) J.
    """
    a = params.h / params.mu
    return {
        "length": 1.0 / params.h,
        "time": params.mu / params.h**2,
        "amplitude": (a, a, a * params.h),
    }


def normalize_array(arr: np.ndarray, grid: GridSpec, params: PhysicalParams):
    """Rescale stacked (..., 3, 3, N, N, N) coefficients; returns (array, grid, params)."""
    f = normalization_factors(params)
    amp = np.asarray(f["amplitude"]).reshape((3, 1, 1, 1, 1))
    new_grid = grid.with_box_length(grid.box_length * f["length"])
    return arr * amp, new_grid, params.normalized()


def denormalize_array(arr: np.ndarray, grid: GridSpec, params: PhysicalParams):
    """Inverse of :func:`normalize_array` for the original ``params``; returns (array, grid)."""
    f = normalization_factors(params)
    amp = np.asarray(f["amplitude"]).reshape((3, 1, 1, 1, 1))
    return arr / amp, grid.with_box_length(grid.box_length / f["length"])


def normalize_state(theta: ExtendedState, params: PhysicalParams):
    arr, grid, p = normalize_array(theta.as_array(), theta.grid, params)
    return ExtendedState.from_array(grid, arr), p
