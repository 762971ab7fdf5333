"""Dirichlet-Neumann operators: flat oracle, Lemma-type properties, and the
paralinearization remainder."""

import numpy as np
import pytest

from stripflow.dn import (
    LambdaSymbol,
    dn_apply,
    dn_flat_symbol,
    paralinearization_remainder,
)
from stripflow.fields import PeriodicField
from stripflow.geometry import (
    InterfaceState,
    PhaseGeometry,
    SIDE_MINUS,
    SIDE_PLUS,
)


def x_of(n):
    return 2.0 * np.pi * np.arange(n) / n


def flat(n=64, c=0.0):
    return InterfaceState(f=np.full(n, c), ft=np.zeros(n), f_star=c)


# ---------------------------------------------------------------------------
# flat-interface closed form
# ---------------------------------------------------------------------------


def test_flat_symbol_values():
    assert dn_flat_symbol(1, 0.0, SIDE_MINUS) == pytest.approx(1.0 / np.tanh(1.0))
    assert dn_flat_symbol(0, 0.0, SIDE_MINUS) == pytest.approx(1.0)
    assert dn_flat_symbol(0, 0.5, SIDE_MINUS) == pytest.approx(1.0 / 1.5)
    assert dn_flat_symbol(0, 0.5, SIDE_PLUS) == pytest.approx(2.0)
    # coth -> 1: value/|k| -> 1
    assert dn_flat_symbol(40, 0.0, SIDE_MINUS) / 40.0 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        dn_flat_symbol(1, 1.0, SIDE_MINUS)


@pytest.mark.parametrize("side", [SIDE_MINUS, SIDE_PLUS])
@pytest.mark.parametrize("c", [0.0, 0.25])
def test_dn_apply_matches_flat_symbol(side, c):
    n, nz = 64, 128
    x = x_of(n)
    iface = flat(n, c)
    geom = PhaseGeometry(iface, side, nz)
    for k in range(0, 17, 4):
        g = np.cos(k * x) if k else np.ones(n)
        out = dn_apply(g, iface, side, geom=geom)
        exact = dn_flat_symbol(k, c, side) * g
        rel = np.abs(out.values - exact).max() / np.abs(exact).max()
        assert rel < 1e-6, f"k={k}: {rel}"


def test_dn_constant_mode_retained():
    # Dirichlet wall condition keeps the zero mode: G(1) = 1/h, not 0
    out = dn_apply(np.ones(32), flat(32), SIDE_MINUS, nz=33)
    assert np.abs(out.values - 1.0).max() < 1e-10


# ---------------------------------------------------------------------------
# operator properties on curved interfaces
# ---------------------------------------------------------------------------


def curved(n=64, eps=0.05, seed=None):
    x = x_of(n)
    if seed is None:
        f = eps * np.sin(x)
    else:
        rng = np.random.default_rng(seed)
        f = PeriodicField.random_band_limited(rng, (n,), 3, amplitude=eps).values
    return InterfaceState(f=f, ft=np.zeros(n))


def test_self_adjointness(rng):
    iface = curved(64, 0.05)
    geom = PhaseGeometry(iface, SIDE_MINUS, 48)
    for _ in range(10):
        phi = PeriodicField.random_band_limited(rng, (64,), 8)
        psi = PeriodicField.random_band_limited(rng, (64,), 8)
        a = dn_apply(phi, iface, SIDE_MINUS, geom=geom).l2_inner(psi)
        b = dn_apply(psi, iface, SIDE_MINUS, geom=geom).l2_inner(phi)
        assert abs(a - b) <= 1e-8 * phi.l2_norm() * psi.l2_norm()


def test_positivity(rng):
    for seed in range(3):
        iface = curved(64, 0.04, seed=seed)
        geom = PhaseGeometry(iface, SIDE_MINUS, 48)
        for _ in range(5):
            phi = PeriodicField.random_band_limited(rng, (64,), 8)
            val = dn_apply(phi, iface, SIDE_MINUS, geom=geom).l2_inner(phi)
            assert val > 0.0


def test_quadratic_form_slope_one():
    iface = curved(128, 0.05)
    geom = PhaseGeometry(iface, SIDE_MINUS, 64)
    x = x_of(128)
    Ns = [2, 4, 8, 16, 32]
    vals = []
    for N in Ns:
        e = PeriodicField(np.cos(N * x))
        vals.append(dn_apply(e, iface, SIDE_MINUS, geom=geom).l2_inner(e))
    slope = np.polyfit(np.log(Ns), np.log(vals), 1)[0]
    assert abs(slope - 1.0) < 0.05


# ---------------------------------------------------------------------------
# paralinearization
# ---------------------------------------------------------------------------


def test_lambda_symbol_lower_bound():
    iface = curved(64, 0.1)
    lam = LambdaSymbol(iface)
    xi = np.array([0.5, 1.0, 4.0, 17.0])
    assert lam.lower_bound_defect([xi]) <= 1e-12
    # d = 1: lambda is exactly |xi|
    assert np.allclose(lam(None, xi), np.abs(xi))


def test_lambda_symbol_homogeneous():
    lam = LambdaSymbol(curved(64, 0.1))
    xi = np.array([2.0, 3.0, 9.0])
    assert np.allclose(lam(None, 4.0 * xi), 4.0 * lam(None, xi))


def test_remainder_zero_data():
    iface = curved(64, 0.05)
    out = paralinearization_remainder(np.zeros(64), iface, SIDE_MINUS, nz=48)
    assert np.abs(out.values).max() < 1e-12


def test_remainder_flat_is_depth_correction():
    # flat interface: R e_N = (|N| coth(Nh) - |N| psi(N)) e_N, exponentially
    # small relative to G e_N at large N
    n, nz = 128, 64
    x = x_of(n)
    iface = flat(n)
    geom = PhaseGeometry(iface, SIDE_MINUS, nz)
    for N in (8, 16):
        e = PeriodicField(np.cos(N * x))
        rem = paralinearization_remainder(e, iface, SIDE_MINUS, geom=geom)
        expected = (N / np.tanh(N) - N) * e.values
        assert np.abs(rem.values - expected).max() < 1e-8


def test_remainder_order_zero_slope():
    # |R e_N| stays bounded while |G e_N| grows linearly
    n, nz = 256, 96
    x = x_of(n)
    iface = InterfaceState(f=0.05 * np.sin(x), ft=np.zeros(n))
    geom = PhaseGeometry(iface, SIDE_MINUS, nz)
    Ns = [4, 8, 16, 32, 64]
    rems, fulls = [], []
    for N in Ns:
        e = PeriodicField(np.cos(N * x))
        rems.append(
            paralinearization_remainder(e, iface, SIDE_MINUS, geom=geom).l2_norm()
        )
        fulls.append(dn_apply(e, iface, SIDE_MINUS, geom=geom).l2_norm())
    rem_slope = np.polyfit(np.log(Ns), np.log(rems), 1)[0]
    full_slope = np.polyfit(np.log(Ns), np.log(fulls), 1)[0]
    assert rem_slope <= 0.2
    assert abs(full_slope - 1.0) < 0.05
