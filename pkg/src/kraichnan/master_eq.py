"""Closed evolution of the mean energy spectrum a_t(k) = E|rho_hat_t(k)|^2.

The linear transport equation driven by the discrete noise model closes at
the level of second moments:

    da(k)/dt = -2 (kappa |k|^2 + nu |k|^beta) a(k) + sum_eta q(eta) |P_eta k|^2 a(k + eta).

Lattices are (2K+1)^2 arrays indexed by n + K.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import ConfigError, NegativeSpectrum
from .grid import lattice_vectors

NEG_TOL = 1e-12


@dataclass(frozen=True)
class Lattice:
    K: int
    L: float

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError(f"lattice half-width must be >= 1, got {self.K}")

    @property
    def shape(self):
        return (2 * self.K + 1, 2 * self.K + 1)

    @property
    def vectors(self):
        return lattice_vectors(self.K, self.L)


def _noise_tables(model, K):
    """q(eta) and q(eta) eta_i eta_j / |eta|^2 on the noise lattice."""
    Kq = model.kmax
    q = model.lattice_q(Kq)
    _, _, e1, e2 = lattice_vectors(Kq, model.grid.L)
    esq = e1**2 + e2**2
    esq[Kq, Kq] = 1.0
    return q, q * e1 * e1 / esq, q * e1 * e2 / esq, q * e2 * e2 / esq


def _correlate(a, w):
    """C(k) = sum_eta w(eta) a(k + eta) with a = 0 off the lattice."""
    return signal.correlate(a, w, mode="same", method="direct" if a.size * w.size < 2e6 else "fft")


@dataclass
class MasterEquation:
    """Right-hand side of the spectral master equation on a finite lattice.

    ``closure`` is "absorbing" (a = 0 off the lattice) or "wrap" (periodic
    lattice with the symmetrised jump kernel, for structural tests).
    """

    model: object
    K: int
    nu: float = 0.0
    beta: float = 1.0
    closure: str = "absorbing"
    kernel: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.closure not in ("absorbing", "wrap"):
            raise ConfigError(f"closure must be 'absorbing' or 'wrap', got {self.closure!r}")
        if self.nu < 0:
            raise ConfigError("nu must be non-negative")
        self.lattice = Lattice(self.K, self.model.grid.L)
        _, _, k1, k2 = self.lattice.vectors
        self.k1, self.k2 = k1, k2
        self.ksq = k1**2 + k2**2
        kappa = self.model.kappa
        self.diss = 2 * self.nu * np.sqrt(self.ksq) ** self.beta if self.nu else np.zeros_like(self.ksq)
        if self.closure == "absorbing":
            self.tables = _noise_tables(self.model, self.K)
            self.loss = 2 * kappa * self.ksq + self.diss
        else:
            self.kernel = wrap_kernel(self.model, self.K)
            self.loss = self.kernel.sum(axis=1).reshape(self.ksq.shape) + self.diss

    def gain(self, a):
        if self.closure == "wrap":
            return (self.kernel @ a.ravel()).reshape(a.shape)
        q, q11, q12, q22 = self.tables
        return (
            self.ksq * _correlate(a, q)
            - self.k1**2 * _correlate(a, q11)
            - 2 * self.k1 * self.k2 * _correlate(a, q12)
            - self.k2**2 * _correlate(a, q22)
        )

    def __call__(self, a):
        return self.gain(a) - self.loss * a

    @property
    def max_diagonal(self):
        return float(np.max(self.loss))

    @property
    def stability_bound(self):
        """Largest RK4 step keeping the update a non-negative averaging map.

        Equals 2 / max(total rate) with total rate = loss + matching gain = 2 * diagonal.
        """
        d = self.max_diagonal
        return np.inf if d == 0 else 1.0 / d


def rhs(a, model, nu=0.0, beta=1.0, closure="absorbing"):
    a = np.asarray(a, dtype=float)
    K = (a.shape[-1] - 1) // 2
    return MasterEquation(model, K, nu, beta, closure)(a)


def jump_form(a, model):
    """sum_eta q(eta) |P_eta k|^2 (a(k + eta) - a(k)) with a = 0 off the lattice, by brute force."""
    a = np.asarray(a, dtype=float)
    K = (a.shape[-1] - 1) // 2
    Kq = model.kmax
    q = model.lattice_q(Kq)
    _, _, k1, k2 = lattice_vectors(K, model.grid.L)
    dk = model.grid.dk
    out = np.zeros_like(a)
    pad = np.zeros((2 * K + 1 + 2 * Kq, 2 * K + 1 + 2 * Kq))
    pad[Kq : Kq + 2 * K + 1, Kq : Kq + 2 * K + 1] = a
    for i in range(2 * Kq + 1):
        for j in range(2 * Kq + 1):
            if q[i, j] == 0:
                continue
            e1, e2 = dk * (i - Kq), dk * (j - Kq)
            proj = k1**2 + k2**2 - (k1 * e1 + k2 * e2) ** 2 / (e1**2 + e2**2)
            shifted = pad[i : i + 2 * K + 1, j : j + 2 * K + 1]
            out += q[i, j] * proj * (shifted - a)
    return out


def wrap_kernel(model, K):
    """Dense symmetric jump kernel on the periodic lattice Z^2 / (2K+1).

    K(j, k) = q(d) (|P_d j|^2 + |P_d k|^2) / 2 with d the minimal representative of j - k.
    """
    n = 2 * K + 1
    if n**2 > 4000:
        raise ConfigError(f"wrap lattice with {n * n} modes is too large for a dense kernel")
    Kq = model.kmax
    q = model.lattice_q(Kq)
    dk = model.grid.dk
    idx = np.arange(-K, K + 1)
    m1, m2 = np.meshgrid(idx, idx, indexing="ij")
    m1, m2 = m1.ravel(), m2.ravel()
    d1 = (m1[:, None] - m1[None, :] + K) % n - K
    d2 = (m2[:, None] - m2[None, :] + K) % n - K
    inside = (np.abs(d1) <= Kq) & (np.abs(d2) <= Kq)
    qd = np.where(inside, q[np.clip(d1 + Kq, 0, 2 * Kq), np.clip(d2 + Kq, 0, 2 * Kq)], 0.0)
    dsq = (d1**2 + d2**2).astype(float)
    dsq[dsq == 0] = 1.0

    def proj(a1, a2):
        return a1**2 + a2**2 - (a1 * d1 + a2 * d2) ** 2 / dsq

    pj = proj(m1[:, None], m2[:, None])
    pk = proj(m1[None, :], m2[None, :])
    kern = qd * 0.5 * (pj + pk) * dk**2
    np.fill_diagonal(kern, 0.0)
    return kern


@dataclass
class SpectrumTrajectory:
    times: np.ndarray
    a: np.ndarray
    K: int
    L: float
    closure: str
    dt: float
    meta: dict = field(default_factory=dict)

    def at(self, t, tol=1e-9):
        i = np.flatnonzero(np.abs(self.times - t) <= tol * max(1.0, abs(t)))
        if i.size == 0:
            raise ConfigError(f"time {t} not on the trajectory")
        return self.a[i[0]]


def _rk4(f, a, dt):
    k1 = f(a)
    k2 = f(a + 0.5 * dt * k1)
    k3 = f(a + 0.5 * dt * k2)
    k4 = f(a + dt * k3)
    return a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(a0, model, nu=0.0, beta=1.0, T=1.0, dt=1e-3, closure="absorbing", record_every=1, check=True):
    """Classical RK4 trajectory of the master equation."""
    a0 = np.array(a0, dtype=float)
    if np.any(a0 < 0):
        raise ConfigError("initial spectrum must be non-negative")
    K = (a0.shape[-1] - 1) // 2
    eq = MasterEquation(model, K, nu, beta, closure)
    if dt > eq.stability_bound * (1 + 1e-12):
        raise ConfigError(f"dt={dt} exceeds the stability bound {eq.stability_bound:.6g}")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigError(f"T={T} is not an integer multiple of dt={dt}")
    times, states = [0.0], [a0.copy()]
    a = a0
    for i in range(1, n + 1):
        a = _rk4(eq, a, dt)
        if check:
            top = float(np.max(a)) if a.size else 0.0
            if np.min(a) < -NEG_TOL * max(top, 1e-300):
                raise NegativeSpectrum(f"negative spectrum {np.min(a):.3e} at step {i}")
        if i % record_every == 0 or i == n:
            times.append(i * dt)
            states.append(a.copy())
    return SpectrumTrajectory(np.array(times), np.array(states), K, model.grid.L, closure, dt,
                              meta={"nu": nu, "beta": beta, "kappa": model.kappa})


def quadratic_form(kernel, a):
    """sum_{j,k} K(j,k) (a_j - a_k)^2."""
    v = a.ravel()
    return float(np.sum(kernel * (v[:, None] - v[None, :]) ** 2))


@dataclass
class MonotonicityReport:
    l2: np.ndarray
    maxima: np.ndarray
    l2_nonincreasing: bool
    max_principle: bool
    decrement_mismatch: float

    @property
    def ok(self):
        return self.l2_nonincreasing and self.max_principle


def l2_monotonicity_check(traj, model, rtol=1e-10):
    """Check ||a||^2 and max a along a wrap-lattice trajectory.

    The decrement d/dt sum a^2 = -sum_{j,k} K(j,k) (a_j - a_k)^2 is compared with
    centred differences of the recorded l2 series.
    """
    if traj.closure != "wrap" or traj.meta.get("nu", 0) != 0:
        raise ConfigError("monotonicity check needs a nu = 0 wrap-lattice trajectory")
    flat = traj.a.reshape(len(traj.times), -1)
    l2 = np.sum(flat**2, axis=1)
    maxima = flat.max(axis=1)
    scale = max(l2[0], 1e-300)
    l2_ok = bool(np.all(np.diff(l2) <= rtol * scale))
    max_ok = bool(np.all(np.diff(maxima) <= rtol * max(maxima[0], 1e-300)))
    kern = wrap_kernel(model, traj.K)
    mismatch = 0.0
    if len(traj.times) >= 3:
        dt = np.diff(traj.times)
        fd = (l2[2:] - l2[:-2]) / (dt[1:] + dt[:-1])
        qf = np.array([-quadratic_form(kern, traj.a[i]) for i in range(1, len(traj.times) - 1)])
        denom = max(np.max(np.abs(qf)), 1e-300)
        mismatch = float(np.max(np.abs(fd - qf)) / denom)
    return MonotonicityReport(l2, maxima, l2_ok, max_ok, mismatch)


@dataclass
class ComparisonReport:
    times: np.ndarray
    z: np.ndarray
    active: np.ndarray
    fraction_within: float
    n_active: int
    worst: tuple
    threshold: float = 3.0
    required: float = 0.95

    @property
    def passed(self):
        return self.n_active > 0 and self.fraction_within >= self.required


def compare_mc(times, mc_mean, mc_se, traj, rel_floor=1e-6, threshold=3.0, required=0.95):
    """Per-mode z-scores of Monte Carlo energies against the master-equation oracle."""
    mc_mean = np.asarray(mc_mean, dtype=float)
    mc_se = np.asarray(mc_se, dtype=float)
    K = (mc_mean.shape[-1] - 1) // 2
    if K != traj.K:
        raise ConfigError(f"lattice mismatch: Monte Carlo K={K}, oracle K={traj.K}")
    oracle = np.array([traj.at(t) for t in times])
    active = np.zeros(oracle.shape, dtype=bool)
    for i in range(len(times)):
        top = oracle[i].max()
        active[i] = oracle[i] > rel_floor * top if top > 0 else False
    diff = mc_mean - oracle
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(mc_se > 0, diff / mc_se, np.where(diff == 0, 0.0, np.inf))
    n_active = int(active.sum())
    if n_active == 0:
        # zero-noise or zero-data case: exact agreement required everywhere
        frac = 1.0 if np.all(z == 0) else 0.0
        worst = (np.nan, 0, 0, 0.0)
        return ComparisonReport(np.asarray(times), z, active, frac, int(frac == 1.0), worst, threshold, required)
    za = np.where(active, np.abs(z), -1.0)
    frac = float(np.sum(active & (np.abs(z) <= threshold)) / n_active)
    i, j, k = np.unravel_index(np.argmax(za), za.shape)
    worst = (float(times[i]), int(j - K), int(k - K), float(z[i, j, k]))
    return ComparisonReport(np.asarray(times), z, active, frac, n_active, worst, threshold, required)


def shell_average(a, L=2 * np.pi):
    """Average of a over integer shells round(|n|); returns (shell, mean)."""
    K = (a.shape[-1] - 1) // 2
    n1, n2, _, _ = lattice_vectors(K, L)
    s = np.rint(np.hypot(n1, n2)).astype(int).ravel()
    counts = np.bincount(s)
    out = np.bincount(s, weights=a.ravel()) / np.maximum(counts, 1)
    return np.arange(out.size), out
