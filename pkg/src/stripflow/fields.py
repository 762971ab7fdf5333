"""Periodic scalar fields on T^d, d in {1, 2}.

Samples live on uniform power-of-two grids over [0, 2pi)^d.  Spectral
coefficients use the mode-amplitude normalization coeff = fft(values) / N,
so a single mode e^{i k.x} has coefficient 1 and H^0 norm 1.
"""

import numpy as np

from .errors import GridMismatchError, InvalidFieldError


def _check_power_of_two(n):
    if n < 2 or (n & (n - 1)):
        raise ValueError(f"grid size {n} is not a power of two >= 2")


class PeriodicField:
    """Real samples on T^d with cached spectral coefficients."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim not in (1, 2):
            raise ValueError("only d = 1 or d = 2 supported")
        for n in values.shape:
            _check_power_of_two(n)
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("field contains non-finite samples")
        self.values = values
        self._coeff = None

    @property
    def d(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    @property
    def coeff(self):
        if self._coeff is None:
            self._coeff = np.fft.fftn(self.values) / self.size
        return self._coeff

    @classmethod
    def from_coeff(cls, coeff):
        coeff = np.asarray(coeff, dtype=complex)
        values = np.fft.ifftn(coeff * coeff.size)
        field = cls(values.real.copy())
        return field

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))

    @classmethod
    def from_function(cls, func, shape):
        grids = np.meshgrid(
            *[2.0 * np.pi * np.arange(n) / n for n in shape], indexing="ij"
        )
        return cls(func(*grids))

    @classmethod
    def random_band_limited(cls, rng, shape, kmax, amplitude=1.0):
        """Random real field supported on modes 1 <= |k|_inf <= kmax."""
        shape = tuple(shape)
        coeff = np.zeros(shape, dtype=complex)
        kvecs = wavevector_grid(shape)
        mask = (np.max(np.abs(kvecs), axis=0) <= kmax) & (
            np.sum(np.abs(kvecs), axis=0) > 0
        )
        coeff[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(
            mask.sum()
        )
        field = cls.from_coeff(coeff)
        scale = np.abs(field.values).max()
        if scale > 0:
            field = field * (amplitude / scale)
        return field

    def same_grid(self, other):
        return self.shape == other.shape

    def _require_same_grid(self, other):
        if not self.same_grid(other):
            raise GridMismatchError(f"grids {self.shape} and {other.shape} differ")

    def __add__(self, other):
        if isinstance(other, PeriodicField):
            self._require_same_grid(other)
            return PeriodicField(self.values + other.values)
        return PeriodicField(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PeriodicField):
            self._require_same_grid(other)
            return PeriodicField(self.values - other.values)
        return PeriodicField(self.values - other)

    def __mul__(self, other):
        if isinstance(other, PeriodicField):
            self._require_same_grid(other)
            return PeriodicField(self.values * other.values)
        return PeriodicField(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(-self.values)

    def deriv(self, axis=0, order=1):
        """Spectral partial derivative along one axis."""
        k = np.fft.fftfreq(self.shape[axis], d=1.0 / self.shape[axis])
        mult = (1j * k) ** order
        if order % 2 == 1 and self.shape[axis] % 2 == 0:
            mult[self.shape[axis] // 2] = 0.0
        shape = [1] * self.d
        shape[axis] = self.shape[axis]
        return PeriodicField.from_coeff(self.coeff * mult.reshape(shape))

    def l2_inner(self, other):
        """Normalized inner product (mean of the pointwise product)."""
        self._require_same_grid(other)
        return float(np.mean(self.values * other.values))

    def l2_norm(self):
        return float(np.sqrt(np.mean(self.values**2)))


def wavevector_grid(shape):
    """Array of integer wavevectors, shape (d,) + grid shape."""
    axes = [np.fft.fftfreq(n, d=1.0 / n) for n in shape]
    return np.array(np.meshgrid(*axes, indexing="ij"))


def wavenumber_magnitude(shape):
    kvecs = wavevector_grid(shape)
    return np.sqrt(np.sum(kvecs**2, axis=0))
