"""Cameron-Martin norms, exponential martingales and Girsanov reweighting.

With the diagonal noise of the sampler, the Cameron-Martin pairing of a drift
h with an increment dW is sum_k Re(conj(h_hat(k)) . dW_hat(k)) / q(k) over the
full lattice, and ||h||_H^2 = sum_k |h_hat(k)|^2 / q(k). Over one step the
density of N(h dt, dt Q) against N(0, dt Q) is then exactly
exp(pairing - dt ||h||_H^2 / 2), so the discrete weights are unbiased.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularPairing
from .master_eq import MasterEquation

ESS_MIN = 10
ROUNDOFF = 1e-20


def cm_multiplier(model, scheme):
    """m(k) = |s(k)|^2 / (|k|^2 q(k)) on the rfft layout (inf where q = 0 and s != 0)."""
    g = model.grid
    s = scheme.symbol(g)
    if s is None:
        return np.zeros(g.rshape)
    q = model.q
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(q > 0, s**2 / (g.ksq * q), np.where(s != 0, np.inf, 0.0))
    m[0, 0] = 0.0
    return m


def _check_pairing(model, scheme):
    if not scheme.matches(model.density):
        raise ConfigError(
            f"scheme {scheme.name} is not paired with the noise density {type(model.density).__name__}"
        )


def cm_multiplier_sum(model, scheme, mag2):
    """sum_k m(k) |w_hat(k)|^2 for batched |w_hat|^2 arrays."""
    m = cm_multiplier(model, scheme)
    # energies at round-off level (e.g. from a grid round trip) do not count
    active = mag2 > ROUNDOFF * np.max(mag2, initial=0.0)
    if np.any(np.isinf(m) & np.any(active.reshape((-1,) + m.shape), axis=0)):
        raise SingularPairing("drift has energy on modes where the noise vanishes")
    m = np.where(np.isinf(m), 0.0, m)
    return np.sum(model.grid.rfft_weight * m * mag2, axis=(-2, -1))


def cameron_martin_norm_sq(omega, scheme, model):
    """||R curl^-1 omega||_H^2 for the covariance of ``model``.

    For the log-Euler pairing this equals (||w||_{H^-1}^2 + ||w||_{L^2}^2) / (c_norm L^2),
    and c_norm L^2 = 4 pi^2 for every period L.
    """
    if not omega.zero_mean:
        raise ConfigError("Cameron-Martin norm needs a zero-mean field")
    _check_pairing(model, scheme)
    return float(cm_multiplier_sum(model, scheme, np.abs(omega.hat) ** 2))


LOG_EULER_CM_CONSTANT = 1.0 / (4 * np.pi**2)


@dataclass
class GirsanovAccumulator:
    """Per-member running terms of log E_T = stochastic_integral - quadratic / 2."""

    stochastic_integral: np.ndarray
    quadratic: np.ndarray
    scheme: object
    sign: float = 1.0
    times: int = 0

    @classmethod
    def zeros(cls, members, scheme, sign=1.0):
        return cls(np.zeros(members), np.zeros(members), scheme, float(sign))

    def update(self, model, h_hat, dW_hat, dt):
        """Add one step; ``h_hat`` is R curl^-1 w at the left point, dW the shared increment."""
        g = model.grid
        q = model.q
        h_hat = self.sign * h_hat
        hm = np.sum(np.abs(h_hat) ** 2, axis=-3)
        active = hm > ROUNDOFF * np.max(hm, initial=0.0)
        if np.any((q == 0) & np.any(active.reshape((-1,) + q.shape), axis=0)):
            raise SingularPairing("drift has energy on modes where the noise vanishes")
        inv_q = np.where(q > 0, 1.0 / np.where(q > 0, q, 1.0), 0.0) * g.rfft_weight
        pair = np.sum(np.real(np.conj(h_hat) * dW_hat), axis=-3)
        self.stochastic_integral += np.sum(inv_q * pair, axis=(-2, -1))
        self.quadratic += dt * np.sum(inv_q * hm, axis=(-2, -1))
        self.times += 1
        return self

    @property
    def log_density(self):
        return self.stochastic_integral - 0.5 * self.quadratic

    @property
    def density(self):
        return np.exp(self.log_density)


def accumulate(acc, model, h_hat, dW_hat, dt):
    return acc.update(model, h_hat, dW_hat, dt)


def entropy_bound(acc):
    """Half the ensemble mean of the accumulated quadratic term, with its standard error."""
    qd = np.asarray(acc.quadratic)
    se = qd.std(ddof=1) / np.sqrt(qd.size) if qd.size > 1 else 0.0
    return 0.5 * float(qd.mean()), 0.5 * float(se)


@dataclass
class Reweighted:
    estimate: float
    stderr: float
    ess: float
    members: int
    warning: str | None = None

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ess": self.ess,
            "M": self.members,
            "warning": self.warning,
        }


def effective_sample_size(weights):
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / np.sum(w**2)) if np.any(w) else 0.0


def reweighted_expectation(values, weights):
    """(1/M) sum F_m E_m with a jackknife standard error and ESS report."""
    F = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    M = F.size
    if M < 2 or w.size != M:
        raise ConfigError("need matching arrays of at least two members")
    prod = F * w
    est = float(prod.mean())
    loo = (prod.sum() - prod) / (M - 1)
    se = float(np.sqrt((M - 1) / M * np.sum((loo - loo.mean()) ** 2)))
    ess = effective_sample_size(w)
    warn = None
    if ess < ESS_MIN:
        warn = f"effective sample size {ess:.1f} below {ESS_MIN}; estimate unreliable"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return Reweighted(est, se, ess, M, warn)


# predictable part of the L2 change for the linear scheme


def compensator_equation(model, K):
    return MasterEquation(model, K)


def l2_compensator_step(eq, stepper, w_hat, K):
    """E_n[||w_{n+1}||^2] - ||w_n||^2 per member for the linear, unforced step."""
    g = stepper.grid
    E2 = g.to_lattice(stepper.E, K).real ** 2
    S2 = g.to_lattice(stepper.S, K).real ** 2
    dt = stepper.cfg.dt
    lat = g.to_lattice(w_hat, K)
    a = np.abs(lat) ** 2
    a[..., K, K] = 0.0
    out = np.empty(a.shape[0])
    for m in range(a.shape[0]):
        out[m] = np.sum((E2 - 1) * a[m] + dt * S2 * eq.gain(a[m]))
    return g.L**2 * out
