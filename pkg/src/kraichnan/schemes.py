"""Drift and dissipation choices for the transport equation.

Each scheme gives the scalar symbol s(k) of the regularising operator R, so
the drift is b = R curl^-1 omega with Fourier symbol s(k) (-i k_perp / |k|^2),
together with the dissipation rate nu |k|^beta.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .spectra import FlandoliTorus, HypoNS, LogEuler


@dataclass(frozen=True)
class Linear:
    """Pure transport by the noise; no drift."""

    nu: float = 0.0
    beta: float = 1.0
    name = "linear"

    def symbol(self, grid):
        return None

    def matches(self, density):
        return True


@dataclass(frozen=True)
class LogEulerScheme:
    """Velocity damped by T_gamma = log^-gamma(e + |grad|)."""

    gamma: float = 1.0
    nu: float = 0.0
    beta: float = 1.0
    name = "log_euler"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")

    def symbol(self, grid):
        return np.log(np.e + grid.kmag) ** (-self.gamma)

    def matches(self, density):
        return isinstance(density, LogEuler) and np.isclose(density.gamma, self.gamma)


@dataclass(frozen=True)
class HypoNSScheme:
    """Navier-Stokes velocity with fractional dissipation nu |k|^beta."""

    beta: float = 0.5
    nu: float = 1.0
    name = "hypo_ns"

    def __post_init__(self):
        if not 0 < self.beta < 2:
            raise ConfigError(f"beta must lie in (0, 2), got {self.beta}")
        if self.nu < 0:
            raise ConfigError(f"nu must be non-negative, got {self.nu}")

    def symbol(self, grid):
        return np.ones(grid.rshape)

    def matches(self, density):
        return isinstance(density, HypoNS) and np.isclose(density.beta, self.beta)


@dataclass(frozen=True)
class GeneralR:
    """Arbitrary radial symbol r(|k|); ``pairs_with`` names a density type or None."""

    multiplier: object
    nu: float = 0.0
    beta: float = 1.0
    pairs_with: type | None = None
    name = "general"

    def symbol(self, grid):
        return np.asarray(self.multiplier(grid.kmag), dtype=float)

    def matches(self, density):
        return self.pairs_with is None or isinstance(density, self.pairs_with)


def flandoli_scheme(gamma=1.0):
    """R = (1 - Laplacian)^(-gamma/2), paired with the FlandoliTorus density."""
    if not 0 < gamma <= 1:
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma}")
    return GeneralR(lambda k: (1 + k**2) ** (-gamma / 2), pairs_with=FlandoliTorus)


def dissipation_rate(scheme, grid):
    if scheme.nu == 0:
        return np.zeros(grid.rshape)
    return scheme.nu * grid.kmag**scheme.beta
