"""Sampled space-time data: grids, trajectories, noise and time mirroring."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidDataError, InvalidParameterError


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid; sample ``(i, n)`` sits at ``(x0 + i*dx, t0 + n*dt)``."""

    n_x: int
    n_t: int
    dx: float
    dt: float
    x0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x < 1:
            raise InvalidParameterError(f"n_x must be a positive integer, got {self.n_x}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise InvalidParameterError(f"n_t must be a positive integer, got {self.n_t}")
        for name in ("dx", "dt"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be positive and finite, got {v}")
        for name in ("x0", "t0"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "n_t", int(self.n_t))

    @property
    def X(self) -> float:
        """Spatial period ``n_x * dx``."""
        return self.n_x * self.dx

    @property
    def T(self) -> float:
        """Temporal period ``n_t * dt``."""
        return self.n_t * self.dt

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n_x)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_t)

    def with_n_t(self, n_t: int) -> "Grid":
        return replace(self, n_t=n_t)


@dataclass(frozen=True)
class Trajectory:
    """Real samples ``values[i, n]`` of u on ``grid`` (space along rows)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InvalidDataError(f"trajectory values must be 2-D, got ndim={values.ndim}")
        if values.shape != (self.grid.n_x, self.grid.n_t):
            raise InvalidDataError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.n_x}, {self.grid.n_t})"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidDataError(f"non-finite sample at (i={bad[0]}, n={bad[1]})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))


@dataclass(frozen=True)
class NoiseSpec:
    nsr: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.nsr) or self.nsr < 0:
            raise InvalidParameterError(f"nsr must be a non-negative real, got {self.nsr}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be a 64-bit unsigned integer")


def add_noise(clean: Trajectory, spec: NoiseSpec) -> Trajectory:
    """Add i.i.d. Gaussian noise with standard deviation ``nsr * RMS(clean)``.

    The draw is fully determined by ``spec.seed``; ``nsr == 0`` returns the
    input samples unchanged.
    """
    if not np.all(np.isfinite(clean.values)):
        raise InvalidDataError("cannot add noise to non-finite data")
    if spec.nsr == 0:
        return clean
    sigma = spec.nsr * clean.rms()
    rng = np.random.default_rng(int(spec.seed))
    eps = rng.normal(0.0, sigma, size=clean.shape)
    return Trajectory(clean.grid, clean.values + eps)


def _mirror(values: np.ndarray, sign: float) -> np.ndarray:
    n_t = values.shape[1]
    if n_t < 2:
        raise InvalidDataError(f"mirror extension needs n_t >= 2, got {n_t}")
    # indices n_t .. 2*n_t-3 reflect onto n_t-2 .. 1
    tail = values[:, n_t - 2 : 0 : -1]
    return np.concatenate([values, sign * tail], axis=1)


def extend_mirror_even(traj: Trajectory) -> Trajectory:
    """Even reflection in time to ``2*n_t - 2`` samples, exactly periodic."""
    ext = _mirror(traj.values, 1.0)
    return Trajectory(traj.grid.with_n_t(ext.shape[1]), ext)


def extend_mirror_odd(feature_values: Trajectory) -> Trajectory:
    """Like :func:`extend_mirror_even` but the reflected half is negated."""
    ext = _mirror(feature_values.values, -1.0)
    return Trajectory(feature_values.grid.with_n_t(ext.shape[1]), ext)


def mirror_even_array(values: np.ndarray) -> np.ndarray:
    return _mirror(np.asarray(values, dtype=np.float64), 1.0)


def mirror_odd_array(values: np.ndarray) -> np.ndarray:
    return _mirror(np.asarray(values, dtype=np.float64), -1.0)
