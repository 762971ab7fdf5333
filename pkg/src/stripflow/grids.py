"""Collocation grids: Fourier in the horizontal, Chebyshev-Lobatto in the vertical.

The horizontal domain is T^d = [0, 2pi)^d sampled on power-of-two grids, so
wavenumbers are integers.  The vertical coordinate lives on a Chebyshev-Lobatto
grid mapped to [a, b]; nodes are stored bottom-up (z[0] = a, z[-1] = b).
"""

from functools import lru_cache

import numpy as np


def fourier_nodes(n):
    return 2.0 * np.pi * np.arange(n) / n


def fourier_wavenumbers(n):
    """Integer wavenumbers in FFT order."""
    return np.fft.fftfreq(n, d=1.0 / n)


def spectral_derivative_coeff(coeff, k, order=1):
    """Differentiate FFT coefficients; the Nyquist mode is zeroed for odd orders."""
    out = coeff * (1j * k) ** order
    if order % 2 == 1:
        n = len(k)
        if n % 2 == 0:
            out[n // 2] = 0.0
    return out


@lru_cache(maxsize=32)
def _chebyshev_matrix(m):
    """Differentiation matrix on the Lobatto nodes cos(pi*j/m), j = 0..m."""
    if m == 0:
        return np.zeros((1, 1)), np.ones(1)
    j = np.arange(m + 1)
    x = np.cos(np.pi * j / m)
    c = np.hstack([2.0, np.ones(m - 1), 2.0]) * (-1.0) ** j
    X = np.tile(x, (m + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


@lru_cache(maxsize=32)
def _clenshaw_curtis_weights(m):
    """Quadrature weights for the Lobatto nodes on [-1, 1]."""
    if m == 0:
        return np.array([2.0])
    w = np.zeros(m + 1)
    v = np.ones(m - 1)
    theta = np.pi * np.arange(1, m) / m
    for kk in range(1, m // 2 + 1):
        factor = 2.0 if 2 * kk < m else 1.0
        v -= factor * np.cos(2.0 * kk * theta) / (4.0 * kk * kk - 1.0)
    w[0] = w[m] = 1.0 / (m * m - 1.0 + (m % 2))
    w[1:m] = 2.0 * v / m
    return w


class ChebyshevGrid:
    """Lobatto grid on [a, b] with nodes ascending in z."""

    def __init__(self, npoints, a, b):
        if npoints < 2:
            raise ValueError("need at least two vertical points")
        if not b > a:
            raise ValueError("empty vertical interval")
        self.n = npoints
        self.a = float(a)
        self.b = float(b)
        m = npoints - 1
        D, x = _chebyshev_matrix(m)
        # cos nodes descend; flip so z ascends from a to b
        scale = (self.b - self.a) / 2.0
        self.z = (self.a + self.b) / 2.0 + scale * x[::-1]
        self.D = D[::-1, ::-1] / scale
        self.D2 = self.D @ self.D
        self.weights = _clenshaw_curtis_weights(m)[::-1] * scale

    def integrate(self, values, axis=0):
        """Clenshaw-Curtis quadrature along the vertical axis."""
        return np.tensordot(self.weights, values, axes=([0], [axis]))


class StripGrid:
    """Tensor grid for one phase: nx Fourier points times nz Chebyshev points.

    Field arrays are shaped (nz, nx).
    """

    def __init__(self, nx, nz, a, b):
        if nx & (nx - 1):
            raise ValueError("horizontal grid size must be a power of two")
        self.nx = nx
        self.nz = nz
        self.x = fourier_nodes(nx)
        self.k = fourier_wavenumbers(nx)
        ik = 1j * np.fft.rfftfreq(nx, d=1.0 / nx)
        ik[-1] = 0.0  # Nyquist mode of odd derivatives is zeroed
        self._ik_r = ik
        self.cheb = ChebyshevGrid(nz, a, b)
        self.z = self.cheb.z
        self.xx, self.zz = np.meshgrid(self.x, self.z)

    def ddx(self, values):
        coeff = np.fft.rfft(values, axis=1)
        out = np.fft.irfft(coeff * self._ik_r, n=self.nx, axis=1)
        return out

    def ddz(self, values):
        return self.cheb.D @ values

    def mean_x(self, values):
        return values.mean(axis=-1)

    def integrate(self, values):
        """Integral over the strip with the normalized horizontal measure.

        Horizontal integrals use the mean over T^1 (consistent with the
        single-mode normalization of the Sobolev norms); vertical integrals
        are true Clenshaw-Curtis integrals.
        """
        return float(self.cheb.integrate(values.mean(axis=1)))
