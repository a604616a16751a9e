"""Initial data generators: seeded random fields, trigonometric presets, snapshot files."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import load_samples
from .ensemble import random_state
from .errors import ConfigurationError, IntegrityError
from .field import GridSpec, VectorField, leray_project, to_spectral
from .nonlinear import ExtendedState


class Preset(str, enum.Enum):
    RANDOM = "RANDOM"
    TAYLOR_GREEN = "TAYLOR_GREEN"
    ORSZAG_TANG = "ORSZAG_TANG"
    ZERO = "ZERO"


@dataclass(frozen=True)
class InitialDataSpec:
    """A named preset with seed and amplitude, or a path to a (u, B) snapshot.

    ``path`` points to a 6-component field container (u then B); the current
    is always recomputed from B.
    """

    preset: Preset | None = Preset.RANDOM
    seed: int = 0
    amplitude: float = 1.0
    alpha: float = 2.0
    k_cut: float | None = 2
    path: str | None = None

    def __post_init__(self):
        if self.preset is not None and not isinstance(self.preset, Preset):
            try:
                object.__setattr__(self, "preset", Preset(self.preset))
            except ValueError:
                raise ConfigurationError(f"unknown initial-data preset {self.preset!r}") from None
        if (self.preset is None) == (self.path is None):
            raise ConfigurationError("give exactly one of preset and path")
        if not self.amplitude >= 0:
            raise ConfigurationError(f"amplitude must be >= 0, got {self.amplitude}")

    def to_dict(self) -> dict:
        return {
            "preset": self.preset.value if self.preset is not None else None,
            "seed": self.seed,
            "amplitude": self.amplitude,
            "alpha": self.alpha,
            "k_cut": self.k_cut,
            "path": self.path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InitialDataSpec":
        return cls(**d)


def _trig_fields(grid: GridSpec, preset: Preset) -> tuple[np.ndarray, np.ndarray]:
    x, y, z = grid.coordinates() * (2 * np.pi / grid.box_length)
    if preset is Preset.TAYLOR_GREEN:
        u = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0 * x])
        # Arnold-Beltrami-Childress field with unit coefficients
        b = np.stack([np.sin(z) + np.cos(y), np.sin(x) + np.cos(z), np.sin(y) + np.cos(x)])
    else:
        u = np.stack([-2 * np.sin(y), 2 * np.sin(x), 0 * x])
        b = np.stack([-2 * np.sin(2 * y) + np.sin(z), 2 * np.sin(x) + np.sin(z), np.sin(x) + np.sin(y)])
    return u, b


def _finish(u: VectorField, b: VectorField, amplitude: float = 1.0) -> ExtendedState:
    u = leray_project(u.mean_free()) * amplitude
    b = leray_project(b.mean_free()) * amplitude
    return ExtendedState.from_ub(u, b)


def generate_initial_data(spec: InitialDataSpec, grid: GridSpec) -> ExtendedState:
    """Build Theta_0 with J_0 = curl B_0, divergence-free and mean-free."""
    if spec.path is not None:
        data, file_grid = load_samples(spec.path)
        if data.shape[0] != 6:
            raise IntegrityError(f"initial data file needs 6 components (u, B), has {data.shape[0]}")
        if file_grid.n_per_axis != grid.n_per_axis or not np.isclose(file_grid.box_length, grid.box_length):
            raise IntegrityError(f"initial data grid {file_grid} does not match {grid}")
        return _finish(to_spectral(data[:3], grid), to_spectral(data[3:], grid), spec.amplitude)
    if spec.preset is Preset.ZERO or spec.amplitude == 0:
        return ExtendedState.zeros(grid)
    if spec.preset is Preset.RANDOM:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        return random_state(grid, rng, spec.alpha, spec.k_cut, spec.amplitude)
    u, b = _trig_fields(grid, spec.preset)
    return _finish(to_spectral(u, grid), to_spectral(b, grid), spec.amplitude)


def state_from_path(path: str | Path, grid: GridSpec) -> ExtendedState:
    return generate_initial_data(InitialDataSpec(preset=None, path=str(path)), grid)


__all__ = ["Preset", "InitialDataSpec", "generate_initial_data", "state_from_path"]
