"""Periodic grid and Fourier-lattice bookkeeping.

Fourier coefficients use the normalisation ``hat = rfft2(values) / N**2`` so
that ``values(x) = sum_k hat(k) exp(i k.x)``. Wavevectors are ``k = 2 pi n / L``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError


@dataclass(frozen=True)
class Grid:
    """Uniform N x N grid on the torus [0, L)^2."""

    N: int
    L: float = 2 * np.pi

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ConfigError(f"N must be an even integer >= 8, got {self.N}")
        if not self.L > 0:
            raise ConfigError(f"L must be positive, got {self.L}")

    @property
    def h(self):
        return self.L / self.N

    @property
    def dk(self):
        return 2 * np.pi / self.L

    @property
    def rshape(self):
        return (self.N, self.N // 2 + 1)

    @property
    def dealias_band(self):
        """Largest |n_i| kept by the 2/3 rule."""
        return (self.N - 1) // 3

    @cached_property
    def coords(self):
        x = np.arange(self.N) * self.h
        return np.meshgrid(x, x, indexing="ij")

    # rfft layout: axis 0 holds n1 in fft order, axis 1 holds n2 >= 0
    @cached_property
    def n1(self):
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)[:, None]

    @cached_property
    def n2(self):
        return np.arange(self.N // 2 + 1)[None, :]

    @cached_property
    def k1(self):
        return np.broadcast_to(self.dk * self.n1, self.rshape)

    @cached_property
    def k2(self):
        return np.broadcast_to(self.dk * self.n2, self.rshape)

    @cached_property
    def ksq(self):
        return self.k1**2 + self.k2**2

    @cached_property
    def kmag(self):
        return np.sqrt(self.ksq)

    @cached_property
    def nyquist(self):
        """Mask of modes with |n1| or |n2| equal to N/2."""
        h = self.N // 2
        return (np.abs(self.n1) == h) | (self.n2 == h)

    @cached_property
    def rfft_weight(self):
        """Multiplicity of each rfft entry in a sum over the full lattice."""
        w = np.full(self.rshape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    def band_mask(self, K):
        """Modes with max(|n1|, |n2|) <= K, Nyquist excluded."""
        return (np.maximum(np.abs(self.n1), self.n2) <= K) & ~self.nyquist

    def to_hat(self, values):
        return sfft.rfft2(values, axes=(-2, -1)) / self.N**2

    def from_hat(self, hat):
        return sfft.irfft2(hat, s=(self.N, self.N), axes=(-2, -1)) * self.N**2

    def to_lattice(self, hat, K):
        """Copy rfft coefficients into a full (2K+1)^2 lattice indexed by n + K."""
        if K > self.N // 2 - 1:
            raise ConfigError(f"lattice half-width {K} exceeds grid band {self.N // 2 - 1}")
        hat = np.asarray(hat)
        out = np.zeros(hat.shape[:-2] + (2 * K + 1, 2 * K + 1), dtype=hat.dtype)
        rows = np.r_[np.arange(-K, 0), np.arange(0, K + 1)]
        ridx = rows % self.N
        # n2 >= 0 block
        out[..., :, K:] = hat[..., ridx, : K + 1]
        # n2 < 0 via conjugate symmetry: c(n1, n2) = conj(c(-n1, -n2))
        neg = hat[..., (-rows) % self.N, 1 : K + 1]
        out[..., :, :K] = np.conj(neg[..., :, ::-1])
        return out

    def from_lattice(self, lat):
        """Inverse of ``to_lattice`` for Hermitian lattice data."""
        lat = np.asarray(lat)
        K = (lat.shape[-1] - 1) // 2
        hat = np.zeros(lat.shape[:-2] + self.rshape, dtype=complex)
        rows = np.arange(-K, K + 1) % self.N
        hat[..., rows, : K + 1] = lat[..., :, K:]
        return hat


def lattice_vectors(K, L):
    """Integer and physical wavevectors on the (2K+1)^2 lattice, indexed by n + K."""
    n = np.arange(-K, K + 1)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    dk = 2 * np.pi / L
    return n1, n2, dk * n1, dk * n2
