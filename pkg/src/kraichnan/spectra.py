"""Spectral densities, discretised noise models and covariance evaluation."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .grid import Grid, lattice_vectors

E = np.e


@dataclass(frozen=True)
class LogEuler:
    """g(r) = (1 + r^2)^-1 log(e + r)^(-2 gamma), gamma > 1/2."""

    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0.5:
            raise ConfigError(f"LogEuler needs gamma > 1/2, got {self.gamma}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 / (1.0 + r**2) * np.log(E + r) ** (-2 * self.gamma)


@dataclass(frozen=True)
class HypoNS:
    """g(r) = (1 + r^2)^(-1 - beta/2), 0 < beta < 2."""

    beta: float = 0.5

    def __post_init__(self):
        if not 0 < self.beta < 2:
            raise ConfigError(f"HypoNS needs 0 < beta < 2, got {self.beta}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r**2) ** (-1 - self.beta / 2)


@dataclass(frozen=True)
class Kraichnan:
    """g(r) = (1 + r)^(-2 - 2 alpha), 0 < alpha < 1."""

    alpha: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"Kraichnan needs 0 < alpha < 1, got {self.alpha}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r) ** (-2 - 2 * self.alpha)


@dataclass(frozen=True)
class FlandoliTorus:
    """g(r) = r^-2 log(e + r)^-2 with g(0) = 0."""

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            g = 1.0 / (r**2 * np.log(E + r) ** 2)
        return np.where(r > 0, g, 0.0)


@dataclass(frozen=True)
class CustomTable:
    """Piecewise-linear density through (radii, values); zero beyond the table."""

    radii: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ConfigError("CustomTable needs matching 1-d radii and values")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("CustomTable radii must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ConfigError("CustomTable values must be finite and non-negative")
        object.__setattr__(self, "radii", tuple(r))
        object.__setattr__(self, "values", tuple(v))

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.radii, self.values, right=0.0)


DENSITIES = {
    "log_euler": LogEuler,
    "hypo_ns": HypoNS,
    "kraichnan": Kraichnan,
    "flandoli": FlandoliTorus,
    "custom": CustomTable,
}


def make_density(family, **params):
    try:
        cls = DENSITIES[family]
    except KeyError:
        raise ConfigError(f"unknown density family {family!r}; choose from {sorted(DENSITIES)}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {family}: {exc}") from None


def eval_g(density, r):
    g = density(r)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ConfigError("density produced negative or non-finite values")
    return g


@dataclass(frozen=True)
class NoiseModel:
    """Noise coefficients q(k) on the rfft layout of ``grid``.

    The mode set is the box 0 < max|n_i| <= kmax. ``kappa`` is one quarter
    of the full-lattice sum of q, so that Q(0) = 2 kappa I.
    """

    grid: Grid
    density: object
    q: np.ndarray = field(repr=False)
    kmax: int
    cutoff: float | None = None

    @cached_property
    def c_norm(self):
        return self.grid.dk**2

    @cached_property
    def kappa(self):
        return 0.25 * float(np.sum(self.grid.rfft_weight * self.q))

    @cached_property
    def support(self):
        return self.q > 0

    def lattice_q(self, K=None):
        """q on the full (2K+1)^2 lattice, indexed by n + K."""
        K = self.kmax if K is None else K
        return self.grid.to_lattice(self.q, K).real


def build_noise_model(density, grid, cutoff=None, kmax=None):
    """Discretise a density on ``grid``; optional smooth cutoff exp(-|k|^2 / cutoff)."""
    if kmax is None:
        kmax = grid.N // 2 - 1
    if int(kmax) != kmax or not 1 <= kmax <= grid.N // 2 - 1:
        raise ConfigError(f"kmax must be an integer in [1, {grid.N // 2 - 1}], got {kmax}")
    if cutoff is not None and not cutoff > 0:
        raise ConfigError(f"cutoff must be positive, got {cutoff}")
    mask = grid.band_mask(kmax)
    mask[0, 0] = False
    q = np.zeros(grid.rshape)
    q[mask] = grid.dk**2 * eval_g(density, grid.kmag[mask])
    if cutoff is not None:
        q *= np.exp(-grid.ksq / cutoff)
    q.setflags(write=False)
    return NoiseModel(grid=grid, density=density, q=q, kmax=int(kmax), cutoff=cutoff)


def covariance_at(model, z):
    """Q(z) = sum_k q(k) P_k cos(k.z) for points z of shape (..., 2); returns (..., 2, 2)."""
    z = np.asarray(z, dtype=float)
    K = model.kmax
    _, _, k1, k2 = lattice_vectors(K, model.grid.L)
    q = model.lattice_q(K)
    sel = q > 0
    k1, k2, q = k1[sel], k2[sel], q[sel]
    ksq = k1**2 + k2**2
    # P_k = I - k k^T / |k|^2
    p11 = 1 - k1 * k1 / ksq
    p12 = -k1 * k2 / ksq
    p22 = 1 - k2 * k2 / ksq
    phase = np.cos(z[..., 0, None] * k1 + z[..., 1, None] * k2) * q
    out = np.empty(z.shape[:-1] + (2, 2))
    out[..., 0, 0] = phase @ p11
    out[..., 0, 1] = out[..., 1, 0] = phase @ p12
    out[..., 1, 1] = phase @ p22
    return out


@dataclass(frozen=True)
class RegularityClass:
    """Qualitative regularity of the covariance, from the density family."""

    l2_loc: bool
    c0_loc: bool
    holder: float | None
    known: bool = True

    @property
    def labels(self):
        out = []
        if self.l2_loc:
            out.append("L2_loc")
        if self.c0_loc:
            out.append("C0_loc")
        if self.holder is not None:
            out.append(f"C^{self.holder:g}")
        return out or ["unknown"]


def classify_regularity(density):
    """Pathwise regularity class of the noise for the built-in families."""
    if isinstance(density, LogEuler):
        return RegularityClass(l2_loc=True, c0_loc=density.gamma > 0.75, holder=None)
    if isinstance(density, HypoNS):
        return RegularityClass(l2_loc=True, c0_loc=True, holder=density.beta / 2)
    if isinstance(density, Kraichnan):
        return RegularityClass(l2_loc=True, c0_loc=True, holder=density.alpha)
    if isinstance(density, FlandoliTorus):
        return RegularityClass(l2_loc=True, c0_loc=False, holder=None)
    return RegularityClass(l2_loc=False, c0_loc=False, holder=None, known=False)
