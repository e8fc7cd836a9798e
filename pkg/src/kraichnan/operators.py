"""Fourier-multiplier operators, norms and the real-space fractional split."""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, PreconditionError
from .grid import Grid

MEAN_TOL = 1e-12


class ScalarField:
    """Real grid values with a cached Fourier view; values are read-only."""

    def __init__(self, grid: Grid, values=None, hat=None):
        if (values is None) == (hat is None):
            raise ValueError("give exactly one of values or hat")
        self.grid = grid
        if values is not None:
            values = np.array(values, dtype=float)
            if values.shape != (grid.N, grid.N):
                raise ValueError(f"expected shape {(grid.N, grid.N)}, got {values.shape}")
        else:
            hat = np.array(hat, dtype=complex)
            values = grid.from_hat(hat)
            self.__dict__["hat"] = hat
            hat.setflags(write=False)
        values.setflags(write=False)
        self.values = values

    @classmethod
    def from_function(cls, grid, fn):
        x1, x2 = grid.coords
        return cls(grid, fn(x1, x2))

    @cached_property
    def hat(self):
        h = self.grid.to_hat(self.values)
        h.setflags(write=False)
        return h

    @property
    def mean(self):
        return float(self.hat[0, 0].real)

    @property
    def zero_mean(self):
        scale = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        return abs(self.mean) <= MEAN_TOL * max(scale, 1e-300)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    grid: Grid
    hat: np.ndarray

    @cached_property
    def values(self):
        return self.grid.from_hat(self.hat)


def _require_zero_mean(phi, what):
    if not phi.zero_mean:
        raise PreconditionError(f"{what} needs a zero-mean field (mean = {phi.mean:.3e})")


def inverse_laplacian_symbol(grid):
    ksq = grid.ksq
    with np.errstate(divide="ignore"):
        return np.where(ksq > 0, 1.0 / ksq, 0.0)


def biot_savart_hat(grid, omega_hat):
    """u_hat = -i k_perp / |k|^2 omega_hat with k_perp = (-k2, k1); curl u = omega."""
    inv = inverse_laplacian_symbol(grid) * omega_hat
    return np.stack([1j * grid.k2 * inv, -1j * grid.k1 * inv], axis=-3)


def biot_savart(omega):
    _require_zero_mean(omega, "biot_savart")
    return VectorField(omega.grid, biot_savart_hat(omega.grid, omega.hat))


def t_gamma_symbol(grid, gamma):
    return np.log(np.e + grid.kmag) ** (-gamma)


def frac_symbol(grid, beta):
    return grid.kmag**beta


def _apply(phi, symbol):
    if isinstance(phi, VectorField):
        return VectorField(phi.grid, phi.hat * symbol)
    return ScalarField(phi.grid, hat=phi.hat * symbol)


def mult_T_gamma(phi, gamma):
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    return _apply(phi, t_gamma_symbol(phi.grid, gamma))


def frac_laplacian(phi, beta):
    if not 0 < beta <= 2:
        raise ConfigError(f"beta must lie in (0, 2], got {beta}")
    return _apply(phi, frac_symbol(phi.grid, beta))


def curl(u):
    g = u.grid
    return ScalarField(g, hat=1j * g.k1 * u.hat[1] - 1j * g.k2 * u.hat[0])


def divergence_hat(u):
    g = u.grid
    return 1j * g.k1 * u.hat[0] + 1j * g.k2 * u.hat[1]


def gradient(phi):
    g = phi.grid
    return VectorField(g, np.stack([1j * g.k1 * phi.hat, 1j * g.k2 * phi.hat]))


def spectral_sum(grid, hat_sq, weight=None):
    """L^2 sum_k weight(k) |c(k)|^2 over the full lattice from rfft coefficients."""
    w = grid.rfft_weight if weight is None else grid.rfft_weight * weight
    return grid.L**2 * float(np.sum(w * hat_sq, axis=(-2, -1)))


def norm_lp(phi, p):
    g = phi.grid
    if np.isinf(p):
        return float(np.max(np.abs(phi.values)))
    return float((np.sum(np.abs(phi.values) ** p) * g.h**2) ** (1.0 / p))


def norm_l2(phi):
    return np.sqrt(spectral_sum(phi.grid, np.abs(phi.hat) ** 2))


def norm_hm1(phi):
    _require_zero_mean(phi, "the H^-1 norm")
    return np.sqrt(spectral_sum(phi.grid, np.abs(phi.hat) ** 2, inverse_laplacian_symbol(phi.grid)))


def norm_hdot(phi, s):
    """Homogeneous Sobolev norm with weight |k|^(2s), mean mode excluded."""
    return np.sqrt(spectral_sum(phi.grid, np.abs(phi.hat) ** 2, phi.grid.kmag ** (2 * s)))


def norm_logweighted(phi, gamma):
    """||T_gamma^-1 phi||_L2: weight log^(2 gamma)(e + |k|)."""
    w = np.log(np.e + phi.grid.kmag) ** (2 * gamma)
    return np.sqrt(spectral_sum(phi.grid, np.abs(phi.hat) ** 2, w))


def norms(phi, p=4.0, beta=0.5, gamma=1.0):
    """Dictionary of the standard norms; H^-1 is NaN for nonzero-mean fields."""
    out = {
        "L1": norm_lp(phi, 1),
        "L2": norm_l2(phi),
        "Lp": norm_lp(phi, p),
        "Hbeta2": norm_hdot(phi, beta / 2),
        "logw": norm_logweighted(phi, gamma),
    }
    out["Hm1"] = norm_hm1(phi) if phi.zero_mean else float("nan")
    return out


# real-space split of the fractional Laplacian


def split_constant(beta, d=2):
    """C_{d,beta} = 2^beta Gamma((d+beta)/2) / (pi^(d/2) |Gamma(-beta/2)|)."""
    return 2**beta * special.gamma((d + beta) / 2) / (np.pi ** (d / 2) * abs(special.gamma(-beta / 2)))


@lru_cache(maxsize=64)
def _outside_square(a, beta):
    """Integral of |w|^(-2-beta) over the plane outside the square [-a, a]^2."""
    val, _ = integrate.quad(lambda th: (a / max(abs(np.cos(th)), abs(np.sin(th)))) ** -beta, 0, np.pi / 4)
    return 8 * val / beta


def periodic_kernel(grid, beta, images=8):
    """Minimal-image offsets and periodised |y|^(-2-beta) on the grid.

    Images with max|m_i| <= ``images`` are summed exactly; the rest are
    replaced by the integral outside the covered square divided by L^2.
    """
    N, L, h = grid.N, grid.L, grid.h
    j = np.fft.fftfreq(N, 1.0 / N)
    y1, y2 = np.meshgrid(j * h, j * h, indexing="ij")
    far = np.zeros((N, N))
    for m1 in range(-images, images + 1):
        for m2 in range(-images, images + 1):
            if m1 == 0 and m2 == 0:
                continue
            far += ((y1 + m1 * L) ** 2 + (y2 + m2 * L) ** 2) ** (-1 - beta / 2)
    far += _outside_square((images + 0.5) * L, beta) / L**2
    r = np.hypot(y1, y2)
    with np.errstate(divide="ignore"):
        near = np.where(r > 0, r ** (-2.0 - beta), 0.0)
    return r, near, far


def _circulant_symbol(grid, w):
    """Eigenvalues of f -> h^2 sum_y w(y) (f(x) - f(x + y)) on the rfft layout."""
    what = np.fft.rfft2(w).real
    return grid.h**2 * (what[0, 0] - what)


def split_symbols(grid, beta, R, images=8, local_correction=True):
    """Multipliers of the two split parts (near |y| <= R, far |y| > R).

    With ``local_correction`` the near part adds the leading Taylor term of
    the cells the rectangle rule misresolves, C D (-Laplacian) / 4, where D is
    the exact minus discrete integral of |y|^-beta over the ball.
    """
    if not 0 < beta < 2:
        raise ConfigError(f"beta must lie in (0, 2), got {beta}")
    if R > grid.L / 2:
        raise ConfigError(f"split radius {R} exceeds half the period {grid.L / 2}")
    if R <= grid.h:
        raise ConfigError(f"split radius {R} must exceed the grid spacing {grid.h}")
    C = split_constant(beta)
    r, near, far = periodic_kernel(grid, beta, images)
    inner = r <= R
    w1 = np.where(inner, near, 0.0)
    w2 = np.where(inner, 0.0, near) + far
    w2[0, 0] = 0.0
    s1 = C * _circulant_symbol(grid, w1)
    if local_correction:
        s1 = s1 + C * _near_defect(grid, beta, R, r) * _five_point_symbol(grid) / 4
    return s1, C * _circulant_symbol(grid, w2)


def _near_defect(grid, beta, R, r):
    """Exact minus rectangle-rule integral of |y|^-beta over 0 < |y| <= R."""
    inner = (r > 0) & (r <= R)
    return 2 * np.pi * R ** (2 - beta) / (2 - beta) - grid.h**2 * np.sum(r[inner] ** -beta)


def _five_point_symbol(grid):
    """Symbol of the 5-point stencil for -Laplacian."""
    h = grid.h
    return (4 * np.sin(grid.k1 * h / 2) ** 2 + 4 * np.sin(grid.k2 * h / 2) ** 2) / h**2


def frac_laplacian_split(phi, beta, R, images=8, local_correction=True):
    """Real-space quadrature of Lambda^beta split at radius R; returns (part1, part2).

    Each part is the rectangle-rule sum C h^2 sum_y w(y) (phi(x) - phi(x+y)) over
    grid offsets, the self cell excluded. The circulant sums are evaluated by FFT.
    The near part carries the 5-point local correction unless disabled.
    """
    s1, s2 = split_symbols(phi.grid, beta, R, images, local_correction)
    return ScalarField(phi.grid, hat=phi.hat * s1), ScalarField(phi.grid, hat=phi.hat * s2)


def frac_laplacian_split_direct(phi, beta, R, images=8):
    """Uncorrected quadrature by explicit shifts; O(N^4), intended for small grids."""
    g = phi.grid
    C = split_constant(beta)
    r, near, far = periodic_kernel(g, beta, images)
    f = phi.values
    p1 = np.zeros_like(f)
    p2 = np.zeros_like(f)
    for a in range(g.N):
        for b in range(g.N):
            if a == 0 and b == 0:
                continue
            diff = f - np.roll(f, (-a, -b), axis=(0, 1))
            if r[a, b] <= R:
                p1 += near[a, b] * diff
            else:
                p2 += near[a, b] * diff
            p2 += far[a, b] * diff
    s = C * g.h**2
    return ScalarField(g, s * p1), ScalarField(g, s * p2)


def calibrate_split_constant(grid, beta, R=None, kmax=4, images=8):
    """Least-squares constant matching the uncorrected quadrature to |k|^beta on |n| <= kmax."""
    R = grid.L / 4 if R is None else R
    s1, s2 = split_symbols(grid, beta, R, images, local_correction=False)
    band = grid.band_mask(kmax)
    band[0, 0] = False
    quad = (s1 + s2)[band] / split_constant(beta)
    target = grid.kmag[band] ** beta
    return float(np.dot(quad, target) / np.dot(quad, quad))
