"""Dirichlet-Neumann operators of the two phases.

G_f^{pm} g is the trace of the outward co-normal derivative of the harmonic
extension of g, where the extension takes the value 0 on the fixed wall
(Dirichlet bottom condition, not the classical Neumann one); with the scaled
normal N = (-grad f, 1),

    G_f^{pm} g = -(pm) N . grad H_f^{pm} g  on Gamma_f,

so for the lower phase G^- g = +N . grad H^- g.  On a flat interface at
height c the operator is the exact multiplier |k| coth(|k| h) with layer
thickness h, retaining the zero mode (G of a constant is 1/h, not 0).

The paralinearization G = T_lambda + R uses the first-order symbol
lambda(x, xi) = sqrt((1 + |grad f|^2)|xi|^2 - (grad f . xi)^2); the remainder
R is order zero.
"""

import numpy as np

from .fields import PeriodicField
from .geometry import InterfaceState, PhaseGeometry, SIDE_MINUS, SIDE_PLUS
from .spectral import SymbolSampler, paradiff_apply


def dn_flat_symbol(k, c, side):
    """Exact flat-interface DN eigenvalue |k| coth(|k| h).

    h is the layer thickness: c + 1 for the lower phase, 1 - c for the upper.
    The zero mode returns 1/h (linear harmonic profile).
    """
    if not -1.0 < c < 1.0:
        raise ValueError("interface height must satisfy |c| < 1")
    h = c + 1.0 if side == SIDE_MINUS else 1.0 - c
    k = np.asarray(k, dtype=float)
    out = np.where(k == 0.0, 1.0 / h, np.abs(k) / np.tanh(np.where(k == 0.0, 1.0, np.abs(k)) * h))
    return out if out.ndim else float(out)


class LambdaSymbol(SymbolSampler):
    """Principal symbol of the DN operators attached to an interface."""

    def __init__(self, interface: InterfaceState):
        self.interface = interface
        if interface.d == 1:
            # (1 + f'^2) xi^2 - (f' xi)^2 = xi^2: the symbol is x-independent
            super().__init__(
                order=1.0,
                evaluator=lambda x, xi: np.abs(xi),
                homogeneous=True,
                x_dependent=False,
            )
        else:
            f = PeriodicField(interface.f)
            f1 = f.deriv(0).values
            f2 = f.deriv(1).values
            self._grad = (f1, f2)

            def evaluate(x, xi):
                # gradient sampled on the interface grid; xi broadcasts over it
                g1, g2 = self._grad
                xi1, xi2 = xi[0], xi[1]
                mag2 = xi1**2 + xi2**2
                dot = g1 * xi1 + g2 * xi2
                return np.sqrt((1.0 + g1**2 + g2**2) * mag2 - dot**2)

            super().__init__(order=1.0, evaluator=lambda x, xi: evaluate(x, xi),
                             homogeneous=True, x_dependent=True)

    def lower_bound_defect(self, xi_samples):
        """max(|xi| - lambda) over samples; nonpositive up to rounding."""
        worst = -np.inf
        for xi in xi_samples:
            vals = self(None, np.asarray(xi, float))
            worst = max(worst, float(np.max(np.abs(xi) - vals)))
        return worst


def dn_apply(g, interface: InterfaceState, side: int, nz: int = 65,
             geom: PhaseGeometry = None, rtol: float = 1e-12) -> PeriodicField:
    """Apply the DN operator by harmonic extension and co-normal trace."""
    gvalues = g.values if isinstance(g, PeriodicField) else np.asarray(g, float)
    if geom is None:
        geom = PhaseGeometry(interface, side, nz)
    ext = geom.harmonic_extension_values(gvalues, rtol=rtol)
    conormal = geom.conormal_trace(ext)
    sign = -1.0 if side == SIDE_PLUS else 1.0
    return PeriodicField(sign * conormal)


def dn_matrix(interface: InterfaceState, side: int, nz: int = 65,
              geom: PhaseGeometry = None, rtol: float = 1e-12) -> np.ndarray:
    """Dense physical-space matrix of the DN operator (d = 1 diagnostics)."""
    nx = interface.nx
    if geom is None:
        geom = PhaseGeometry(interface, side, nz)
    cols = []
    for j in range(nx):
        e = np.zeros(nx)
        e[j] = 1.0
        cols.append(dn_apply(e, interface, side, geom=geom, rtol=rtol).values)
    return np.array(cols).T


def paralinearization_remainder(g, interface: InterfaceState, side: int,
                                nz: int = 65, geom: PhaseGeometry = None,
                                rtol: float = 1e-12) -> PeriodicField:
    """Order-zero remainder R^{pm} g = G^{pm} g - T_lambda g."""
    gfield = g if isinstance(g, PeriodicField) else PeriodicField(np.asarray(g, float))
    full = dn_apply(gfield, interface, side, nz=nz, geom=geom, rtol=rtol)
    principal = paradiff_apply(LambdaSymbol(interface), gfield)
    return full - principal
