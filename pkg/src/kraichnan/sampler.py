"""Gaussian divergence-free increments with covariance dt * Q, and diagnostics.

In two dimensions P_k is the rank-one projector onto k_perp / |k|, so an
increment is a complex scalar amplitude per mode times the unit vector
k_perp / |k|. The amplitude is circular Gaussian with E|z|^2 = q(k) dt, i.e.
real and imaginary parts each carry variance q(k) dt / 2.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


def member_key(master_seed, member_id):
    """128-bit Philox key for one ensemble member."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(member_id)])
    return ss.generate_state(2, np.uint64)


def stream(key, step):
    """Counter-based generator for (member key, step index); order independent."""
    counter = np.array([0, 0, 0, int(step)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class VectorFieldIncrement:
    """Increment with rfft coefficients ``hat`` of shape (..., 2, N, N//2+1)."""

    grid: object
    hat: np.ndarray

    @cached_property
    def values(self):
        return self.grid.from_hat(self.hat)


def _unit_perp(grid):
    ksq = grid.ksq
    with np.errstate(invalid="ignore", divide="ignore"):
        kn = np.where(ksq > 0, 1.0 / np.sqrt(ksq), 0.0)
    return -grid.k2 * kn, grid.k1 * kn


class IncrementDrawer:
    """Reusable sampler bound to a noise model; draws rfft coefficients."""

    def __init__(self, model):
        self.model = model
        g = model.grid
        self.e1, self.e2 = _unit_perp(g)
        # independent representatives: n2 > 0, or n2 = 0 with n1 > 0
        rep = model.q > 0
        rep[:, 0] &= g.n1[:, 0] > 0
        self.rows, self.cols = np.nonzero(rep)
        self.amp = np.sqrt(model.q[rep])
        self.mirror = self.cols == 0
        self.mrows = (-self.rows[self.mirror]) % g.N

    def draw_values(self, rng, dt):
        """Complex amplitudes on the independent representatives, E|z|^2 = q dt."""
        n = self.amp.size
        g = rng.standard_normal(2 * n)
        return (g[:n] + 1j * g[n:]) * (self.amp * np.sqrt(0.5 * dt))

    def assemble(self, vals):
        """Vector coefficients (..., 2, N, N//2+1) from amplitudes of shape (..., n)."""
        vals = np.asarray(vals)
        z = np.zeros(vals.shape[:-1] + self.model.q.shape, dtype=complex)
        z[..., self.rows, self.cols] = vals
        # k_perp / |k| is odd in k, so the scalar mirrors with a sign flip
        z[..., self.mrows, 0] = -np.conj(vals[..., self.mirror])
        return np.stack([self.e1 * z, self.e2 * z], axis=-3)

    def draw(self, rng, dt):
        return self.assemble(self.draw_values(rng, dt))


def sample_increment(model, dt, rng):
    """One increment W over a step dt drawn from ``rng``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    return VectorFieldIncrement(model.grid, IncrementDrawer(model).draw(rng, dt))


def exact_structure_function(model, r):
    """2 Tr[Q(0) - Q(r)] for separation vectors r of shape (..., 2)."""
    r = np.asarray(r, dtype=float)
    g = model.grid
    w = g.rfft_weight * model.q
    sel = w > 0
    k1, k2, w = g.k1[sel], g.k2[sel], w[sel]
    # Tr P_k = 1 in two dimensions
    phase = r[..., 0, None] * k1 + r[..., 1, None] * k2
    return 2.0 * ((1.0 - np.cos(phase)) @ w)


def axis_structure_function(model, r):
    """Exact structure function along the x1 axis via the n1-marginal of q."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    g = model.grid
    marginal = np.sum(g.rfft_weight * model.q, axis=1)
    k1 = g.k1[:, 0]
    return 2.0 * ((1.0 - np.cos(np.outer(r, k1))) @ marginal)


def structure_function(model, M_samples, shifts, master_seed=0, batch=64):
    """Empirical and exact E|W(x) - W(x + r)|^2 for unit-time increments.

    ``shifts`` are integer grid offsets along x1; the average runs over all
    grid points and samples. Returns (separations, empirical, exact).
    """
    if M_samples < 100:
        raise ConfigError("structure_function needs M_samples >= 100")
    shifts = np.asarray(shifts, dtype=int)
    drawer = IncrementDrawer(model)
    g = model.grid
    key = member_key(master_seed, 0)
    acc = np.zeros(shifts.size)
    done = 0
    while done < M_samples:
        nb = min(batch, M_samples - done)
        hats = np.stack([drawer.draw(stream(key, done + j), 1.0) for j in range(nb)])
        w = g.from_hat(hats)
        for i, s in enumerate(shifts):
            d = w - np.roll(w, -s, axis=-2)
            acc[i] += np.sum(d**2) / g.N**2
        done += nb
    sep = shifts * g.h
    emp = acc / M_samples
    exact = axis_structure_function(model, sep)
    return sep, emp, exact
