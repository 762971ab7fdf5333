"""Interface geometry: normal/tangent frames, harmonic coordinates mapping the
flat reference strips onto the curved phase domains, harmonic extensions and
tangential derivatives.

The reference strips sit below/above the constant reference height f_star, so
the vertical component of the harmonic coordinates solves a Laplace problem on
a flat strip and is computed exactly per Fourier mode.  Curved-domain PDE
problems are pulled back through these coordinates (module `elliptic`).
"""

from dataclasses import dataclass

import numpy as np

from .errors import BijectivityError, GridMismatchError, InvalidFieldError
from .fields import PeriodicField
from .grids import StripGrid

SIDE_MINUS = -1
SIDE_PLUS = +1


@dataclass
class InterfaceState:
    """Interface height f, its material derivative ft = D_t f, and the
    reference height f_star (constant)."""

    f: np.ndarray
    ft: np.ndarray
    f_star: float = 0.0

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.ft = np.asarray(self.ft, dtype=float)
        if self.f.shape != self.ft.shape:
            raise GridMismatchError("f and ft live on different grids")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.ft))):
            raise InvalidFieldError("interface data contains non-finite samples")
        if self.f.min() <= -1.0 or self.f.max() >= 1.0:
            raise InvalidFieldError("interface must stay strictly inside the strip")
        if not -1.0 < self.f_star < 1.0:
            raise InvalidFieldError("reference height outside the strip")

    @property
    def d(self):
        return self.f.ndim

    @property
    def nx(self):
        return self.f.shape[0]

    def f_field(self):
        return PeriodicField(self.f)

    def ft_field(self):
        return PeriodicField(self.ft)

    def fx(self, axis=0):
        return self.f_field().deriv(axis=axis).values

    @staticmethod
    def from_modes(nx, modes, f_star=0.0, ft_modes=()):
        """Build from a list of (amplitude, wavenumber, phase) cosine modes."""
        x = 2.0 * np.pi * np.arange(nx) / nx
        f = np.zeros(nx)
        for amp, k, phase in modes:
            f += amp * np.cos(k * x + phase)
        ft = np.zeros(nx)
        for amp, k, phase in ft_modes:
            ft += amp * np.cos(k * x + phase)
        return InterfaceState(f=f, ft=ft, f_star=f_star)


def frame(interface: InterfaceState):
    """Scaled normal N and tangents tau_i of the interface graph.

    d = 1: N = (-f', 1), one tangent (1, f').
    d = 2: N = (-d1 f, -d2 f, 1), tangents (1, 0, d1 f), (0, 1, d2 f).
    """
    f = interface.f_field()
    if interface.d == 1:
        fx = f.deriv(0).values
        normal = np.stack([-fx, np.ones_like(fx)])
        tangents = (np.stack([np.ones_like(fx), fx]),)
    else:
        f1 = f.deriv(0).values
        f2 = f.deriv(1).values
        one = np.ones_like(f1)
        zero = np.zeros_like(f1)
        normal = np.stack([-f1, -f2, one])
        tangents = (np.stack([one, zero, f1]), np.stack([zero, one, f2]))
    return normal, tangents


def _stable_sinh_ratio(kappa, a, h):
    """sinh(kappa a)/sinh(kappa h) for 0 <= a <= h, overflow-safe."""
    e = np.exp(kappa * (a - h))
    return e * (1.0 - np.exp(-2.0 * kappa * a)) / (1.0 - np.exp(-2.0 * kappa * h))


def _stable_cosh_ratio(kappa, a, h):
    e = np.exp(kappa * (a - h))
    return e * (1.0 + np.exp(-2.0 * kappa * a)) / (1.0 - np.exp(-2.0 * kappa * h))


def flat_extension(gvalues, z, side, f_star):
    """Harmonic extension on the flat reference strip of interface data g with
    zero Dirichlet data on the wall.  Returns (values, d/dz values), each of
    shape (nz, nx).  Exact per Fourier mode."""
    g = np.asarray(gvalues, dtype=float)
    nx = g.shape[0]
    ghat = np.fft.rfft(g)
    kr = np.arange(ghat.shape[0], dtype=float)
    if side == SIDE_MINUS:
        h = f_star + 1.0
        a = (z + 1.0)[:, None]
        dsign = 1.0
    else:
        h = 1.0 - f_star
        a = (1.0 - z)[:, None]
        dsign = -1.0
    vals = np.empty((z.size, kr.size), dtype=complex)
    dvals = np.empty_like(vals)
    vals[:, 0] = ghat[0] * (a[:, 0] / h)
    dvals[:, 0] = ghat[0] * dsign / h
    if kr.size > 1:
        kk = kr[None, 1:]
        vals[:, 1:] = ghat[None, 1:] * _stable_sinh_ratio(kk, a, h)
        dvals[:, 1:] = ghat[None, 1:] * dsign * kk * _stable_cosh_ratio(kk, a, h)
    out = np.fft.irfft(vals, n=nx, axis=1)
    dout = np.fft.irfft(dvals, n=nx, axis=1)
    return out, dout


class PhaseGeometry:
    """Harmonic coordinates for one phase: the map (x, z) -> (x, phi(x, z)) from
    the flat reference strip onto the curved domain, with Jacobian fields."""

    def __init__(self, interface: InterfaceState, side: int, nz: int):
        if interface.d != 1:
            raise NotImplementedError("curved-domain geometry implemented for d = 1")
        if side not in (SIDE_MINUS, SIDE_PLUS):
            raise ValueError("side must be -1 or +1")
        self.interface = interface
        self.side = side
        fs = interface.f_star
        a, b = (-1.0, fs) if side == SIDE_MINUS else (fs, 1.0)
        self.grid = StripGrid(interface.nx, nz, a, b)
        dev = interface.f - fs
        ext, dext = flat_extension(dev, self.grid.z, side, fs)
        self.phi = self.grid.zz + ext
        self.phi_z = 1.0 + dext
        fx = interface.fx()
        ext_x, _ = flat_extension(
            PeriodicField(dev).deriv(0).values, self.grid.z, side, fs
        )
        self.phi_x = ext_x
        jac_min = float(self.phi_z.min())
        if jac_min < 0.1:
            raise BijectivityError(
                f"det DPhi reaches {jac_min:.3g} < 0.1; map may fold"
            )
        self.fx = fx
        self._hext_cache = {}

    @property
    def jacobian(self):
        """Jacobian determinant field det DPhi = dphi/dz."""
        return self.phi_z

    @property
    def interface_row(self):
        return -1 if self.side == SIDE_MINUS else 0

    @property
    def wall_row(self):
        return 0 if self.side == SIDE_MINUS else -1

    @property
    def thickness(self):
        return (
            self.interface.f_star + 1.0
            if self.side == SIDE_MINUS
            else 1.0 - self.interface.f_star
        )

    # coefficient fields of the pulled-back Laplacian div(B grad w) = J * f
    def coeff_B(self):
        b11 = self.phi_z
        b12 = -self.phi_x
        b22 = (1.0 + self.phi_x**2) / self.phi_z
        return b11, b12, b22

    def dx_phys(self, values):
        """Horizontal physical derivative of reference samples."""
        return self.grid.ddx(values) - (self.phi_x / self.phi_z) * self.grid.ddz(
            values
        )

    def dz_phys(self, values):
        """Vertical physical derivative of reference samples."""
        return self.grid.ddz(values) / self.phi_z

    def grad_phys(self, values):
        wz = self.grid.ddz(values)
        return self.grid.ddx(values) - (self.phi_x / self.phi_z) * wz, wz / self.phi_z

    def conormal_trace(self, values):
        """N . grad_y w on the interface collocation line (scaled normal)."""
        wx, wz = self.grad_phys(values)
        row = self.interface_row
        return -self.fx * wx[row] + wz[row]

    def integrate_phys(self, values):
        """Integral over the curved phase domain (normalized x measure)."""
        return self.grid.integrate(values * self.phi_z)

    def harmonic_extension_values(self, gvalues, rtol=1e-12):
        """Curved-domain harmonic extension, memoized per boundary datum."""
        key = np.asarray(gvalues).tobytes()
        if key not in self._hext_cache:
            from .elliptic import harmonic_extension_solve

            self._hext_cache[key] = harmonic_extension_solve(self, gvalues, rtol=rtol)
        return self._hext_cache[key]


def harmonic_coordinates(interface: InterfaceState, side: int, nz: int):
    """Solve for the harmonic coordinates of one phase.

    Returns the PhaseGeometry holding map samples and the Jacobian field;
    raises BijectivityError when the Jacobian determinant drops below 0.1.
    """
    return PhaseGeometry(interface, side, nz)


@dataclass
class StripField:
    """Samples of a scalar field on the reference strip of one phase."""

    geom: PhaseGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.geom.grid.nz, self.geom.grid.nx)
        if self.values.shape != expected:
            raise GridMismatchError(
                f"strip field shape {self.values.shape}, expected {expected}"
            )

    @property
    def side(self):
        return self.geom.side

    def trace_interface(self):
        return self.values[self.geom.interface_row].copy()

    def trace_wall(self):
        return self.values[self.geom.wall_row].copy()

    def dx(self):
        return StripField(self.geom, self.geom.dx_phys(self.values))

    def dz(self):
        return StripField(self.geom, self.geom.dz_phys(self.values))

    def __add__(self, other):
        if isinstance(other, StripField):
            return StripField(self.geom, self.values + other.values)
        return StripField(self.geom, self.values + other)

    def __sub__(self, other):
        if isinstance(other, StripField):
            return StripField(self.geom, self.values - other.values)
        return StripField(self.geom, self.values - other)

    def __mul__(self, other):
        if isinstance(other, StripField):
            return StripField(self.geom, self.values * other.values)
        return StripField(self.geom, self.values * other)

    __rmul__ = __mul__


def harmonic_extension(g, interface: InterfaceState, side: int, nz: int = 33,
                       geom: PhaseGeometry = None, rtol=1e-12) -> StripField:
    """Harmonic extension of interface data g to the curved phase domain with
    zero Dirichlet data on the fixed wall."""
    gvalues = g.values if isinstance(g, PeriodicField) else np.asarray(g, float)
    if geom is None:
        geom = harmonic_coordinates(interface, side, nz)
    values = geom.harmonic_extension_values(gvalues, rtol=rtol)
    return StripField(geom, values)


def tangential_derivative(w: StripField, j, wt: np.ndarray = None,
                          dt_f: np.ndarray = None) -> StripField:
    """Tangential derivative of a strip field.

    j = 1 gives d/dx + H(d1 f) d/dz (physical derivatives); j = 't' gives
    dt + H(dt f) d/dz, where `wt` holds the Eulerian time-derivative samples
    of w (zero for static fields).  The boundary datum of the extension is
    the Eulerian dt f; it defaults to the stored interface.ft (which carries
    D_t f = dt f + u1 d1 f), so callers with moving fluid on a sloped
    interface should pass dt_f explicitly.
    """
    geom = w.geom
    if j == 1:
        hext = geom.harmonic_extension_values(geom.fx)
        wx, wz = geom.grad_phys(w.values)
        return StripField(geom, wx + hext * wz)
    if j == "t":
        datum = geom.interface.ft if dt_f is None else np.asarray(dt_f, float)
        hext = geom.harmonic_extension_values(datum)
        wz = geom.dz_phys(w.values)
        base = np.zeros_like(w.values) if wt is None else np.asarray(wt, float)
        return StripField(geom, base + hext * wz)
    raise ValueError("j must be 1 or 't' for d = 1 interfaces")


def pullback_h_norm(field: StripField, s: int) -> float:
    """Integer-order H^s norm over the curved phase domain via the pullback.

    Derivatives are physical (chain rule through the harmonic coordinates);
    the measure carries the Jacobian determinant.
    """
    from math import comb

    geom = field.geom
    total = 0.0
    level = [field.values]
    for order in range(s + 1):
        weight = comb(s, order)
        for arr in level:
            total += weight * geom.integrate_phys(arr * arr)
        if order == s:
            break
        nxt = []
        for arr in level:
            wx, wz = geom.grad_phys(arr)
            nxt.append(wx)
            nxt.append(wz)
        level = nxt
    return float(np.sqrt(total))
