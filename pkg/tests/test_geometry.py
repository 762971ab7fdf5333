"""Geometry: frames, harmonic coordinates, harmonic extensions, tangential
derivatives."""

import numpy as np
import pytest

from stripflow.errors import BijectivityError, InvalidFieldError
from stripflow.fields import PeriodicField
from stripflow.geometry import (
    InterfaceState,
    PhaseGeometry,
    SIDE_MINUS,
    SIDE_PLUS,
    StripField,
    frame,
    harmonic_coordinates,
    harmonic_extension,
    pullback_h_norm,
    tangential_derivative,
)


def x_of(n):
    return 2.0 * np.pi * np.arange(n) / n


def flat_interface(n=64):
    return InterfaceState(f=np.zeros(n), ft=np.zeros(n))


def wavy_interface(n=64, eps=0.05):
    x = x_of(n)
    return InterfaceState(f=eps * np.sin(x), ft=np.zeros(n))


# ---------------------------------------------------------------------------
# InterfaceState and frames
# ---------------------------------------------------------------------------


def test_interface_must_stay_inside_strip():
    with pytest.raises(InvalidFieldError):
        InterfaceState(f=np.full(8, 1.0), ft=np.zeros(8))
    with pytest.raises(InvalidFieldError):
        InterfaceState(f=np.full(8, -1.2), ft=np.zeros(8))


def test_frame_flat():
    N, taus = frame(flat_interface())
    assert np.allclose(N[0], 0.0) and np.allclose(N[1], 1.0)
    assert np.allclose(taus[0][0], 1.0) and np.allclose(taus[0][1], 0.0)


def test_frame_single_mode():
    n, eps = 64, 0.1
    x = x_of(n)
    iface = InterfaceState(f=eps * np.sin(x), ft=np.zeros(n))
    N, _ = frame(iface)
    assert np.abs(N[0] + eps * np.cos(x)).max() < 1e-12
    assert np.allclose(N[1], 1.0)


def test_frame_orthogonality(rng):
    f = PeriodicField.random_band_limited(rng, (64,), 5, amplitude=0.2)
    iface = InterfaceState(f=f.values, ft=np.zeros(64))
    N, taus = frame(iface)
    dot = N[0] * taus[0][0] + N[1] * taus[0][1]
    assert np.abs(dot).max() < 1e-12


def test_frame_2d():
    f = np.zeros((16, 16))
    iface = InterfaceState(f=f, ft=np.zeros_like(f))
    N, taus = frame(iface)
    assert N.shape == (3, 16, 16)
    assert np.allclose(N[2], 1.0)
    assert len(taus) == 2


# ---------------------------------------------------------------------------
# harmonic coordinates
# ---------------------------------------------------------------------------


def test_harmonic_coordinates_identity_at_reference():
    geom = harmonic_coordinates(flat_interface(), SIDE_MINUS, 17)
    assert np.abs(geom.phi - geom.grid.zz).max() < 1e-13
    assert np.abs(geom.phi_z - 1.0).max() < 1e-13
    assert np.abs(geom.phi_x).max() < 1e-13


def test_harmonic_coordinates_boundary_traces():
    iface = wavy_interface(64, 0.08)
    for side in (SIDE_MINUS, SIDE_PLUS):
        geom = harmonic_coordinates(iface, side, 33)
        assert np.abs(geom.phi[geom.interface_row] - iface.f).max() < 1e-12
        wall = -1.0 if side == SIDE_MINUS else 1.0
        assert np.abs(geom.phi[geom.wall_row] - wall).max() < 1e-12


def test_harmonic_coordinates_jacobian_positive():
    geom = harmonic_coordinates(wavy_interface(64, 0.05), SIDE_MINUS, 64)
    assert geom.jacobian.min() > 0.0


def test_harmonic_coordinates_interior_harmonicity():
    # the vertical map solves the flat-strip Laplace equation
    geom = harmonic_coordinates(wavy_interface(64, 0.05), SIDE_MINUS, 33)
    grid = geom.grid
    lap = grid.ddx(grid.ddx(geom.phi)) + grid.ddz(grid.ddz(geom.phi))
    assert np.abs(lap[1:-1]).max() < 1e-8


def test_bijectivity_guard():
    n = 64
    x = x_of(n)
    steep = InterfaceState(f=0.9 * np.sin(x), ft=np.zeros(n))
    with pytest.raises(BijectivityError):
        harmonic_coordinates(steep, SIDE_MINUS, 33)


def test_pullback_norm_equivalence():
    # |u o Phi|_{H^2(ref)} <= C |u|_{H^2(Omega_f)} with measured C < 10
    iface = wavy_interface(64, 0.05)
    geom = harmonic_coordinates(iface, SIDE_MINUS, 33)
    X, Z = geom.grid.xx, geom.phi
    u = np.sin(X) * np.cos(2.0 * Z)
    # reference-coordinate H^2 of the pullback samples
    grid = geom.grid
    ref_sq = 0.0
    level = [u]
    for order in range(3):
        weight = [1, 2, 1][order]
        for arr in level:
            ref_sq += weight * float(grid.cheb.integrate(arr.mean(axis=1) * 0 + (arr * arr).mean(axis=1)))
        if order < 2:
            level = [g for arr in level for g in (grid.ddx(arr), grid.ddz(arr))]
    ref_norm = np.sqrt(ref_sq)
    phys_norm = pullback_h_norm(StripField(geom, u), 2)
    assert ref_norm <= 10.0 * phys_norm


# ---------------------------------------------------------------------------
# harmonic extension
# ---------------------------------------------------------------------------


def test_extension_of_zero():
    ext = harmonic_extension(np.zeros(64), flat_interface(), SIDE_MINUS, nz=17)
    assert np.abs(ext.values).max() < 1e-13


def test_extension_flat_constant():
    c = 0.7
    ext = harmonic_extension(np.full(64, c), flat_interface(), SIDE_MINUS, nz=33)
    expected = c * (ext.geom.grid.zz + 1.0)
    assert np.abs(ext.values - expected).max() < 1e-11


def test_extension_flat_single_mode():
    n, k = 64, 3
    x = x_of(n)
    ext = harmonic_extension(np.cos(k * x), flat_interface(n), SIDE_MINUS, nz=48)
    zz = ext.geom.grid.zz
    expected = np.cos(k * x)[None, :] * np.sinh(k * (zz + 1.0)) / np.sinh(k)
    assert np.abs(ext.values - expected).max() < 1e-10


def test_extension_flat_plus_side():
    n, k = 64, 2
    x = x_of(n)
    ext = harmonic_extension(np.cos(k * x), flat_interface(n), SIDE_PLUS, nz=48)
    zz = ext.geom.grid.zz
    expected = np.cos(k * x)[None, :] * np.sinh(k * (1.0 - zz)) / np.sinh(k)
    assert np.abs(ext.values - expected).max() < 1e-10


def test_extension_maximum_principle(rng):
    # smooth one-signed interface data with zero wall data: the extension
    # stays inside the [0, max g] envelope to discretization accuracy
    g = PeriodicField.random_band_limited(rng, (64,), 4, amplitude=0.5).values + 1.0
    ext = harmonic_extension(g, wavy_interface(64, 0.04), SIDE_MINUS, nz=33)
    assert ext.values.min() > -1e-8
    assert ext.values.max() < g.max() + 1e-8


# ---------------------------------------------------------------------------
# tangential derivatives
# ---------------------------------------------------------------------------


def test_tangential_reduces_to_horizontal_on_flat():
    n = 64
    x = x_of(n)
    geom = harmonic_coordinates(flat_interface(n), SIDE_MINUS, 33)
    w = StripField(geom, np.cos(2 * x)[None, :] * np.ones((33, 1)))
    dw = tangential_derivative(w, 1)
    expected = -2 * np.sin(2 * x)[None, :] * np.ones((33, 1))
    assert np.abs(dw.values - expected).max() < 1e-10


def test_tangential_annihilates_level_function():
    # dbar_1 (x3 - extended height) vanishes on the interface
    iface = wavy_interface(64, 0.05)
    geom = harmonic_coordinates(iface, SIDE_MINUS, 48)
    hext = geom.harmonic_extension_values(iface.f)
    w = StripField(geom, geom.phi - hext)
    dw = tangential_derivative(w, 1)
    assert np.abs(dw.trace_interface()).max() < 1e-8


def test_material_derivative_decomposition():
    # D_t = dbar_t + u1 dbar_1 on the interface for kinematically consistent
    # (u, f): residual of the two evaluations of D_t w below 1e-8
    n, nz = 64, 48
    x = x_of(n)
    iface = wavy_interface(n, 0.04)
    geom_tmp = harmonic_coordinates(iface, SIDE_MINUS, nz)
    X, Z = geom_tmp.grid.xx, geom_tmp.phi
    # divergence-free velocity with psi constant on the wall
    u1 = -np.pi * np.sin(X) * np.cos(np.pi * (Z + 1.0))
    u3 = np.cos(X) * np.sin(np.pi * (Z + 1.0))
    fx = iface.fx()
    row = geom_tmp.interface_row
    dtf = u3[row] - fx * u1[row]  # kinematic dt f = u . N
    iface = InterfaceState(f=iface.f, ft=u3[row])  # ft carries D_t f = u3
    geom = harmonic_coordinates(iface, SIDE_MINUS, nz)
    # static scalar field w(x, z): D_t w = u . grad w on the interface
    w = StripField(geom, np.sin(X) * np.cos(2.0 * Z))
    wx, wz = geom.grad_phys(w.values)
    lhs = (u1 * wx + u3 * wz)[row]
    dbar_t = tangential_derivative(w, "t", dt_f=dtf)  # Eulerian datum
    dbar_1 = tangential_derivative(w, 1)
    rhs = dbar_t.trace_interface() + u1[row] * dbar_1.trace_interface()
    assert np.abs(lhs - rhs).max() < 1e-8
