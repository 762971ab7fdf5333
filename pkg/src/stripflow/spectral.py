"""Fourier analysis on T^d: Sobolev norms, Littlewood-Paley blocks, Bony
paraproducts and paradifferential operators.

Dyadic blocks use a fixed C^3 cutoff zeta (degree-7 smoothstep) with
zeta = 1 on |xi| <= 1.1 and zeta = 0 on |xi| >= 1.9, the derived partition
phi_0 = zeta, phi_k = zeta_k - zeta_{k-1}, and a high-frequency cutoff psi
vanishing for |eta| <= 1 and equal to 1 for |eta| >= 2.

Paradifferential operators T_a quantize a symbol a(x, xi) block-wise: on
block k the symbol is smoothed in x by the dilated lowpass zeta_{k-3} and
applied to psi * Delta_k u as an x-dependent Fourier multiplier.  For an
x-independent symbol this collapses exactly to the multiplier a(xi) psi(xi).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidFieldError, SymbolError
from .fields import PeriodicField, wavenumber_magnitude, wavevector_grid


def _smoothstep7(t):
    """C^3 monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))


def zeta_profile(r):
    """Radial lowpass profile: 1 on [0, 1.1], 0 on [1.9, inf)."""
    r = np.asarray(r, dtype=float)
    return 1.0 - _smoothstep7((r - 1.1) / 0.8)

def psi_profile(r):
    """High-frequency cutoff: 0 on [0, 1], 1 on [2, inf)."""
    r = np.asarray(r, dtype=float)
    return _smoothstep7(r - 1.0)


class CutoffFamily:
    """Dyadic cutoffs evaluated on the frequency grid of a given field shape."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        self.kmag = wavenumber_magnitude(self.shape)
        maxr = max(self.kmag.max(), 1.0)
        # smallest K with zeta_K = 1 on the whole grid
        self.nblocks = int(np.ceil(np.log2(maxr / 1.1))) + 1
        self._phi = []
        prev = None
        for k in range(self.nblocks + 1):
            zk = zeta_profile(self.kmag / 2.0**k)
            self._phi.append(zk if prev is None else zk - prev)
            prev = zk
        self.psi = psi_profile(self.kmag)

    def zeta_k(self, k):
        """Dilated profile zeta(2^-k |xi|) for any integer k (nonzero for k < 0)."""
        return zeta_profile(self.kmag / 2.0**k)

    def phi(self, k):
        """Block profile phi_k; zero array for k < 0 or beyond the grid."""
        if k < 0 or k > self.nblocks:
            return np.zeros(self.shape)
        return self._phi[k]

    def lowpass_multiplier(self, k):
        """Multiplier of S_k = sum_{l<=k} Delta_l: zeta_k for k >= 0, else 0."""
        if k < 0:
            return np.zeros(self.shape)
        return zeta_profile(self.kmag / 2.0**k)

    def partition_defect(self):
        total = sum(self._phi)
        return float(np.abs(total - 1.0).max())


_cutoff_cache = {}


def cutoffs_for(shape):
    shape = tuple(shape)
    if shape not in _cutoff_cache:
        _cutoff_cache[shape] = CutoffFamily(shape)
    return _cutoff_cache[shape]


def sobolev_norm(u: PeriodicField, s: float) -> float:
    """H^s norm: ( sum_k (1+|k|^2)^s |u_k|^2 )^{1/2}."""
    if s < -2.0:
        raise ValueError("s >= -2 required")
    if not np.all(np.isfinite(u.values)):
        raise InvalidFieldError("non-finite samples")
    weight = (1.0 + wavenumber_magnitude(u.shape) ** 2) ** s
    return float(np.sqrt(np.sum(weight * np.abs(u.coeff) ** 2)))


def lp_block(u: PeriodicField, k: int) -> PeriodicField:
    """Littlewood-Paley block Delta_k u (zero field for k < 0)."""
    cut = cutoffs_for(u.shape)
    if k < 0:
        return PeriodicField.zeros(u.shape)
    return PeriodicField.from_coeff(u.coeff * cut.phi(k))


def lowpass(u: PeriodicField, k: int) -> PeriodicField:
    """S_k u = sum_{l<=k} Delta_l u."""
    cut = cutoffs_for(u.shape)
    return PeriodicField.from_coeff(u.coeff * cut.lowpass_multiplier(k))


def paraproduct(a: PeriodicField, u: PeriodicField) -> PeriodicField:
    """Bony paraproduct T_a u = sum_{k>=3} S_{k-3}a Delta_k u."""
    a._require_same_grid(u)
    cut = cutoffs_for(u.shape)
    out = np.zeros(u.shape)
    for k in range(3, cut.nblocks + 1):
        ak = np.fft.ifftn(a.coeff * cut.lowpass_multiplier(k - 3)).real * a.size
        uk = np.fft.ifftn(u.coeff * cut.phi(k)).real * u.size
        out += ak * uk
    return PeriodicField(out)


def bony_decompose(a: PeriodicField, u: PeriodicField):
    """Split a*u into (T_a u, T_u a, R(a, u)); the parts sum to the grid product."""
    a._require_same_grid(u)
    cut = cutoffs_for(u.shape)
    blocks_a = [
        np.fft.ifftn(a.coeff * cut.phi(k)).real * a.size
        for k in range(cut.nblocks + 1)
    ]
    blocks_u = [
        np.fft.ifftn(u.coeff * cut.phi(k)).real * u.size
        for k in range(cut.nblocks + 1)
    ]
    t_au = np.zeros(u.shape)
    t_ua = np.zeros(u.shape)
    rem = np.zeros(u.shape)
    for k in range(cut.nblocks + 1):
        if k >= 3:
            s_a = sum(blocks_a[:k - 2])
            t_au += s_a * blocks_u[k]
            s_u = sum(blocks_u[:k - 2])
            t_ua += s_u * blocks_a[k]
        lo = max(k - 2, 0)
        hi = min(k + 2, cut.nblocks)
        near = sum(blocks_u[lo:hi + 1])
        rem += blocks_a[k] * near
    return PeriodicField(t_au), PeriodicField(t_ua), PeriodicField(rem)


def dealias_product(a: PeriodicField, u: PeriodicField) -> PeriodicField:
    """Pointwise product with 2/3-rule truncation of inputs and output."""
    a._require_same_grid(u)
    mask = _dealias_mask(a.shape)
    av = np.fft.ifftn(a.coeff * mask).real * a.size
    uv = np.fft.ifftn(u.coeff * mask).real * u.size
    prod = PeriodicField(av * uv)
    return PeriodicField.from_coeff(prod.coeff * mask)


_dealias_cache = {}


def _dealias_mask(shape):
    shape = tuple(shape)
    if shape not in _dealias_cache:
        kvecs = wavevector_grid(shape)
        mask = np.ones(shape)
        for axis, n in enumerate(shape):
            mask *= np.abs(kvecs[axis]) <= n / 3.0
        _dealias_cache[shape] = mask
    return _dealias_cache[shape]


@dataclass
class SymbolSampler:
    """Symbol a(x, xi) of order m.

    evaluator(x, xi) takes broadcastable arrays: x has shape (d,) + B1,
    xi has shape (d,) + B2 and the result broadcasts; for d = 1 plain
    arrays are accepted.  x_dependent = False enables the exact
    multiplier fast path.
    """

    order: float
    evaluator: Callable
    homogeneous: bool = False
    x_dependent: bool = True

    def __call__(self, x, xi):
        vals = np.asarray(self.evaluator(x, xi), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise SymbolError("symbol evaluator returned non-finite values")
        return vals


def multiplier_symbol(func, order, homogeneous=False):
    """Symbol depending on xi only; func maps wavevector arrays to values."""
    return SymbolSampler(
        order=order,
        evaluator=lambda x, xi: func(xi),
        homogeneous=homogeneous,
        x_dependent=False,
    )


def abs_xi_symbol(power=1.0):
    """|xi|^power, first-order homogeneous for power = 1."""

    def func(xi):
        xi = np.asarray(xi, dtype=float)
        mag = np.abs(xi) if xi.ndim <= 1 else np.sqrt(np.sum(xi**2, axis=0))
        return mag**power

    return multiplier_symbol(func, order=power, homogeneous=True)


def paradiff_apply(a: SymbolSampler, u: PeriodicField) -> PeriodicField:
    """Apply the paradifferential operator T_a to u.

    Realized block-wise: contribution of block k is
    sum_xi [zeta_{k-3}-smoothed a](x, xi) psi(xi) phi_k(xi) u_hat(xi) e^{i xi.x}.
    """
    if a.order > 2.0:
        raise ValueError("symbols of order > 2 unsupported")
    cut = cutoffs_for(u.shape)
    if not a.x_dependent:
        weight = cut.psi.copy()
        active = weight > 0
        mult = np.zeros(u.shape)
        kvecs = wavevector_grid(u.shape)
        xi = kvecs[..., active] if u.d == 2 else kvecs[0][active]
        mult[active] = a(None, xi)
        return PeriodicField.from_coeff(u.coeff * mult * weight)
    if u.d == 1:
        return _paradiff_apply_1d(a, u, cut)
    return _paradiff_apply_nd(a, u, cut)


def _paradiff_apply_1d(a, u, cut):
    n = u.shape[0]
    x = 2.0 * np.pi * np.arange(n) / n
    kgrid = np.fft.fftfreq(n, d=1.0 / n)
    phase = np.exp(1j * np.outer(x, kgrid))
    out = np.zeros(n)
    for k in range(cut.nblocks + 1):
        wk = cut.phi(k) * cut.psi
        idx = np.nonzero(wk)[0]
        if idx.size == 0:
            continue
        vals = a(x[:, None], kgrid[None, idx])
        # smooth the symbol in x with the dilated profile zeta_{k-3}
        sym_hat = np.fft.fft(vals, axis=0) * zeta_profile(
            np.abs(kgrid) / 2.0 ** (k - 3)
        )[:, None]
        sym = np.fft.ifft(sym_hat, axis=0)
        coeffs = wk[idx] * u.coeff[idx]
        out += (sym * phase[:, idx] @ coeffs).real
    return PeriodicField(out)


def _paradiff_apply_nd(a, u, cut):
    shape = u.shape
    kvecs = wavevector_grid(shape)
    axes_x = [2.0 * np.pi * np.arange(n) / n for n in shape]
    xg = np.array(np.meshgrid(*axes_x, indexing="ij"))
    out = np.zeros(shape)
    for k in range(cut.nblocks + 1):
        wk = cut.phi(k) * cut.psi
        sel = np.nonzero(wk)
        if sel[0].size == 0:
            continue
        smooth = zeta_profile(cut.kmag / 2.0 ** (k - 3))
        weighted = wk[sel] * u.coeff[sel]
        for j in range(sel[0].size):
            xi = np.array([kvecs[0][sel][j], kvecs[1][sel][j]])
            vals = a(xg, xi.reshape(2, 1, 1))
            sym = np.fft.ifftn(np.fft.fftn(vals) * smooth)
            mode = np.exp(1j * (xi[0] * xg[0] + xi[1] * xg[1]))
            out += (sym * mode * weighted[j]).real
    return PeriodicField(out)


def paradiff_matrix(a: SymbolSampler, n: int) -> np.ndarray:
    """Dense coefficient-space matrix of T_a on T^1 with n points.

    Column m holds the FFT coefficients of T_a e^{i k_m x}; the adjoint with
    respect to the normalized inner product is the conjugate transpose.
    """
    x = 2.0 * np.pi * np.arange(n) / n
    kgrid = np.fft.fftfreq(n, d=1.0 / n)
    cut = cutoffs_for((n,))
    phys = np.zeros((n, n), dtype=complex)
    phase = np.exp(1j * np.outer(x, kgrid))
    for k in range(cut.nblocks + 1):
        wk = cut.phi(k) * cut.psi
        idx = np.nonzero(wk)[0]
        if idx.size == 0:
            continue
        if a.x_dependent:
            vals = a(x[:, None], kgrid[None, idx])
            sym_hat = np.fft.fft(vals, axis=0) * zeta_profile(
                np.abs(kgrid) / 2.0 ** (k - 3)
            )[:, None]
            sym = np.fft.ifft(sym_hat, axis=0)
        else:
            sym = np.tile(a(None, kgrid[idx]), (n, 1))
        phys[:, idx] += sym * phase[:, idx] * wk[idx]
    return np.fft.fft(phys, axis=0) / n


def apply_matrix(mat: np.ndarray, u: PeriodicField) -> PeriodicField:
    return PeriodicField.from_coeff(mat @ u.coeff)
