"""Self-similar vortex backgrounds w_t(x) = t^-1 W(t^(-1/alpha) x), their forcing,
and the time-integrability of the associated norms.

The profile W is a smooth compactly supported bump in s = |xi|^2 / R^2:

    bump:     W = A e b(s),               b(s) = exp(-1 / (1 - s)) on s < 1,
    annular:  W = A e (1 - c s) b(s),     c chosen so that W has zero integral.

An ``ellipticity`` a != 1 replaces |xi|^2 by (xi_1 / a)^2 + (a xi_2)^2, which
keeps the area and the zero integral but breaks radial symmetry.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError
from .operators import ScalarField, biot_savart_hat, frac_symbol


def _b(s):
    out = np.zeros_like(s)
    inside = s < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return out


def _db(s):
    out = np.zeros_like(s)
    inside = s < 1
    si = s[inside]
    out[inside] = -np.exp(-1.0 / (1.0 - si)) / (1.0 - si) ** 2
    return out


@lru_cache(maxsize=1)
def annular_constant():
    """c with int_0^1 (1 - c s) b(s) ds = 0, i.e. zero integral over the disc."""
    bfun = lambda s: np.exp(-1.0 / (1.0 - s)) if s < 1 else 0.0
    m0, _ = integrate.quad(bfun, 0, 1, epsabs=1e-14, epsrel=1e-13)
    m1, _ = integrate.quad(lambda s: s * bfun(s), 0, 1, epsabs=1e-14, epsrel=1e-13)
    return m0 / m1


@dataclass(frozen=True)
class SimilarityProfile:
    alpha: float
    beta: float
    amplitude: float = 1.0
    radius: float = 1.0
    kind: str = "annular"
    ellipticity: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta < self.alpha < 2:
            raise ConfigError(f"need 0 < beta < alpha < 2, got alpha={self.alpha}, beta={self.beta}")
        if self.kind not in ("annular", "bump"):
            raise ConfigError(f"profile kind must be annular or bump, got {self.kind!r}")
        if not self.radius > 0 or not self.ellipticity > 0:
            raise ConfigError("radius and ellipticity must be positive")

    @property
    def extent(self):
        """Largest distance from the centre reached by the support at unit scale."""
        return self.radius * max(self.ellipticity, 1.0 / self.ellipticity)

    def _s(self, xi1, xi2):
        a = self.ellipticity
        return ((xi1 / a) ** 2 + (a * xi2) ** 2) / self.radius**2

    def _radial(self, s):
        b = _b(s)
        if self.kind == "bump":
            return np.e * self.amplitude * b
        return np.e * self.amplitude * (1 - annular_constant() * s) * b

    def _radial_ds(self, s):
        db = _db(s)
        if self.kind == "bump":
            return np.e * self.amplitude * db
        c = annular_constant()
        return np.e * self.amplitude * (-c * _b(s) + (1 - c * s) * db)

    def value(self, xi1, xi2):
        return self._radial(self._s(xi1, xi2))

    def grad_dot_xi(self, xi1, xi2):
        """xi . grad W; s is homogeneous of degree 2, so this is 2 s dW/ds."""
        s = self._s(xi1, xi2)
        return 2 * s * self._radial_ds(s)


def _scaled_coords(profile, t, grid):
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    ext = t ** (1.0 / profile.alpha) * profile.extent
    if ext >= grid.L / 2:
        raise DomainError(f"support radius {ext:.4g} at t={t} does not fit in half the period {grid.L / 2:.4g}")
    x1, x2 = grid.coords
    c = grid.L / 2
    lam = t ** (-1.0 / profile.alpha)
    return lam * (x1 - c), lam * (x2 - c)


def background(profile, t, grid):
    xi1, xi2 = _scaled_coords(profile, t, grid)
    return ScalarField(grid, profile.value(xi1, xi2) / t)


def time_derivative(profile, t, grid):
    """Closed form of d/dt w_t = -t^-2 [W + W_grad / alpha](t^(-1/alpha) x)."""
    xi1, xi2 = _scaled_coords(profile, t, grid)
    return ScalarField(grid, -(profile.value(xi1, xi2) + profile.grad_dot_xi(xi1, xi2) / profile.alpha) / t**2)


def dissipation(profile, t, grid):
    """Lambda^beta w_t, applied spectrally on the grid."""
    w = background(profile, t, grid)
    return ScalarField(grid, hat=w.hat * frac_symbol(grid, profile.beta))


def forcing(profile, t, grid):
    """f_t = d/dt w_t + Lambda^beta w_t."""
    return ScalarField(grid, time_derivative(profile, t, grid).values + dissipation(profile, t, grid).values)


class SelfSimilarForcing:
    """Forcing provider for the solver, with time origin shifted by ``t0``.

    Over a step the time-derivative part integrates exactly to the difference
    of backgrounds; the dissipative part uses the midpoint rule. The grid mean
    left by sampling the zero-integral profile is projected out, so the
    solver sees zero-mean data and forcing.
    """

    def __init__(self, profile, t0=1.0):
        self.profile = profile
        self.t0 = t0

    def at(self, grid, t):
        return forcing(self.profile, self.t0 + t, grid)

    def integral(self, grid, t0, t1):
        p = self.profile
        a, b = self.t0 + t0, self.t0 + t1
        jump = background(p, b, grid).hat - background(p, a, grid).hat
        out = jump + (t1 - t0) * dissipation(p, 0.5 * (a + b), grid).hat
        out[0, 0] = 0.0
        return out

    def initial(self, grid):
        w = background(self.profile, self.t0, grid)
        return ScalarField(grid, w.values - w.mean)


@dataclass(frozen=True)
class Predicates:
    omega_L2tLp: bool
    omega_Hbeta2: bool
    f_L1tLp: bool
    full: bool

    def as_dict(self):
        return dict(self.__dict__)


def _check_order(alpha, beta, p):
    if not 0 < beta < alpha < 2:
        raise ConfigError(f"need 0 < beta < alpha < 2, got alpha={alpha}, beta={beta}")
    if not p >= 1:
        raise ConfigError(f"p must be >= 1, got {p}")


def exponents(alpha, beta, p):
    """Power-law exponents e of the t-integrands near t = 0 (integrable iff e > -1).

    ||w_t||_Lp^2 ~ t^(2(-1 + 2/(alpha p))), ||w_t||_{H^(beta/2)}^2 ~ t^(-2 + (2 - beta)/alpha),
    ||dt w_t||_Lp ~ t^(-2 + 2/(alpha p)), ||Lambda^beta w_t||_Lp ~ t^(-1 - beta/alpha + 2/(alpha p)).
    """
    return {
        "omega_L2tLp": 2 * (-1 + 2 / (alpha * p)),
        "omega_Hbeta2": -2 + (2 - beta) / alpha,
        "f_dt": -2 + 2 / (alpha * p),
        "f_diss": -1 - beta / alpha + 2 / (alpha * p),
    }


def _closed_form(alpha, beta, p):
    return (alpha < 4 / p, alpha + beta < 2, alpha < 2 / p and beta < 2 / p)


def integrability_predicates(alpha, beta, p):
    _check_order(alpha, beta, p)
    l2, hb, f = _closed_form(alpha, beta, p)
    # the non-uniqueness statement needs the whole chain in L^1 and L^2
    full = all(all(_closed_form(alpha, beta, r)) for r in (1, 2))
    return Predicates(l2, hb, f, full)


@dataclass
class QuadratureReport:
    t_mins: np.ndarray
    values: dict
    slopes: dict
    verdicts: dict
    exponents: dict
    cauchy: dict

    def predicates(self):
        v = self.verdicts
        return {
            "omega_L2tLp": v["omega_L2tLp"] == "converges",
            "omega_Hbeta2": v["omega_Hbeta2"] == "converges",
            "f_L1tLp": v["f_dt"] == "converges" and v["f_diss"] == "converges",
        }


def _integral(e, a, b=1.0):
    """int_a^b t^e dt by adaptive quadrature in u = log t."""
    val, _ = integrate.quad(lambda u: np.exp((e + 1) * u), np.log(a), np.log(b), epsabs=0, epsrel=1e-12, limit=200)
    return val


def _log_shell(e, a, b):
    """log int_a^b t^e dt; the integrand is scaled by b^-(e+1) first so tiny shells do not underflow."""
    lb = np.log(b)
    val, _ = integrate.quad(lambda u: np.exp((e + 1) * (u - lb)), np.log(a), lb, epsabs=0, epsrel=1e-12, limit=200)
    return (e + 1) * lb + np.log(val)


def quadrature_confirmation(alpha, beta, p, t_min=0.1, levels=8, factor=10.0, tol=1e-6):
    """Numerical t-integrals over [t_min / factor^j, 1] and their growth law.

    The slope of log(increment) against log(t_min) over geometric shells equals
    e + 1 for a power integrand: positive means convergence, zero a logarithmic
    divergence, negative a power divergence with that blow-up exponent.
    """
    _check_order(alpha, beta, p)
    if not 0 < t_min <= 0.1:
        raise ConfigError(f"t_min must lie in (0, 0.1], got {t_min}")
    tm = t_min / factor ** np.arange(levels)
    ex = exponents(alpha, beta, p)
    values, slopes, verdicts, cauchy = {}, {}, {}, {}
    for name, e in ex.items():
        # shells [tm[j+1], tm[j]] integrated separately so tiny tails do not cancel
        log_shells = np.array([_log_shell(e, tm[j + 1], tm[j]) for j in range(levels - 1)])
        vals = _integral(e, tm[0]) + np.r_[0.0, np.cumsum(np.exp(log_shells))]
        slope = float(np.polyfit(np.log(tm[1:]), log_shells, 1)[0])
        values[name] = vals
        slopes[name] = slope
        cauchy[name] = bool(abs(vals[-1] - vals[-2]) <= 1e-3 * max(abs(vals[-1]), 1.0))
        if slope > tol:
            verdicts[name] = "converges"
        elif slope < -tol:
            verdicts[name] = "power divergence"
        else:
            verdicts[name] = "log divergence"
    return QuadratureReport(tm, values, slopes, verdicts, ex, cauchy)


@dataclass
class Residual:
    transport_norm: float
    transport_relative: float
    pde_residual_norm: float
    pde_relative: float


def residual(profile, t, grid, h=1e-3):
    """Transport and forced-PDE residuals of the background at time t."""
    from .operators import norm_l2

    w = background(profile, t, grid)
    g = grid
    u_hat = biot_savart_hat(g, w.hat)
    u = g.from_hat(u_hat)
    grad = g.from_hat(np.stack([1j * g.k1 * w.hat, 1j * g.k2 * w.hat]))
    adv = np.sum(u * grad, axis=0)
    tn = float(np.sqrt(np.sum(adv**2) * g.h**2))
    umax = float(np.max(np.sqrt(np.sum(u**2, axis=0))))
    gn = float(np.sqrt(np.sum(grad**2) * g.h**2))
    dtw = (background(profile, t + h, g).values - background(profile, t - h, g).values) / (2 * h)
    res = dtw + adv + dissipation(profile, t, g).values - forcing(profile, t, g).values
    rn = float(np.sqrt(np.sum(res**2) * g.h**2))
    fn = norm_l2(forcing(profile, t, g))
    return Residual(tn, tn / (umax * gn) if umax * gn > 0 else 0.0, rn, rn / fn if fn > 0 else 0.0)
