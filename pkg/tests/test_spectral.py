"""Spectral core: Sobolev norms, Littlewood-Paley blocks, Bony calculus and
paradifferential quantization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stripflow.errors import GridMismatchError, InvalidFieldError
from stripflow.fields import PeriodicField
from stripflow.spectral import (
    CutoffFamily,
    abs_xi_symbol,
    apply_matrix,
    bony_decompose,
    cutoffs_for,
    lowpass,
    lp_block,
    multiplier_symbol,
    paradiff_apply,
    paradiff_matrix,
    paraproduct,
    sobolev_norm,
    SymbolSampler,
    zeta_profile,
)


def x_of(n):
    return 2.0 * np.pi * np.arange(n) / n


# ---------------------------------------------------------------------------
# PeriodicField basics
# ---------------------------------------------------------------------------


def test_roundtrip_transform(rng):
    u = PeriodicField(rng.standard_normal(64))
    back = np.fft.ifftn(u.coeff * u.size).real
    assert np.abs(back - u.values).max() < 1e-12 * max(1.0, np.abs(u.values).max())


def test_hermitian_symmetry(rng):
    u = PeriodicField(rng.standard_normal((16, 16)))
    c = u.coeff
    flipped = np.conj(c[(-np.arange(16)) % 16][:, (-np.arange(16)) % 16])
    assert np.abs(c - flipped).max() < 1e-13


def test_non_finite_rejected():
    bad = np.zeros(8)
    bad[3] = np.nan
    with pytest.raises(InvalidFieldError):
        PeriodicField(bad)


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        PeriodicField(np.zeros(8)) * PeriodicField(np.zeros(16))


# ---------------------------------------------------------------------------
# sobolev_norm
# ---------------------------------------------------------------------------


def test_sobolev_constant_mode():
    assert sobolev_norm(PeriodicField(np.ones(64)), 0.0) == pytest.approx(1.0)


def test_sobolev_single_mode():
    # cos x carries two coefficients of 1/2: H^1 norm sqrt(2 * (1+1) * 1/4) = 1,
    # consistent with the complex mode e^{ix} having H^1 norm sqrt(2)
    u = PeriodicField(np.cos(x_of(64)))
    assert sobolev_norm(u, 1.0) == pytest.approx(1.0, abs=1e-13)
    assert sobolev_norm(u, 0.0) == pytest.approx(np.sqrt(0.5), abs=1e-13)


def test_sobolev_quadrature_oracle_1d(rng):
    # H^2 norm against direct quadrature of u^2 + 2 u'^2 + u''^2
    u = PeriodicField.random_band_limited(rng, (64,), kmax=6)
    u1 = u.deriv(0, 1)
    u2 = u.deriv(0, 2)
    quad = np.mean(u.values**2 + 2.0 * u1.values**2 + u2.values**2)
    assert sobolev_norm(u, 2.0) == pytest.approx(np.sqrt(quad), rel=1e-8)


def test_sobolev_quadrature_oracle_2d(rng):
    u = PeriodicField.random_band_limited(rng, (32, 32), kmax=5)
    ux, uy = u.deriv(0), u.deriv(1)
    uxx, uyy, uxy = u.deriv(0, 2), u.deriv(1, 2), u.deriv(0).deriv(1)
    quad = np.mean(
        u.values**2
        + 2.0 * (ux.values**2 + uy.values**2)
        + uxx.values**2 + 2.0 * uxy.values**2 + uyy.values**2
    )
    assert sobolev_norm(u, 2.0) == pytest.approx(np.sqrt(quad), rel=1e-8)


def test_sobolev_rejects_low_order():
    with pytest.raises(ValueError):
        sobolev_norm(PeriodicField(np.ones(8)), -3.0)


# ---------------------------------------------------------------------------
# cutoffs and Littlewood-Paley blocks
# ---------------------------------------------------------------------------


def test_zeta_profile_support():
    assert zeta_profile(1.05) == 1.0
    assert zeta_profile(1.95) == 0.0
    r = np.linspace(1.1, 1.9, 33)
    vals = zeta_profile(r)
    assert np.all(np.diff(vals) <= 1e-14)


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([16, 32, 64, 128, 256]))
def test_partition_of_unity(n):
    assert CutoffFamily((n,)).partition_defect() < 1e-12


def test_partition_of_unity_2d():
    assert CutoffFamily((32, 32)).partition_defect() < 1e-12


def test_lp_block_single_mode():
    u = PeriodicField(np.cos(x_of(64)))
    assert np.abs(lp_block(u, 0).values - u.values).max() < 1e-13
    for k in (1, 2, 3):
        assert np.abs(lp_block(u, k).values).max() < 1e-13
    assert np.abs(lp_block(u, -1).values).max() == 0.0


def test_lp_block_sum_reconstructs(rng):
    u = PeriodicField(rng.standard_normal(128))
    cut = cutoffs_for(u.shape)
    total = sum(lp_block(u, k).values for k in range(cut.nblocks + 1))
    assert np.abs(total - u.values).max() < 1e-12 * np.abs(u.values).max()


def test_lp_block_high_mode_support():
    # e^{32 i x} lives only in the block with 1.1 2^{k-1} < 32 <= 1.9 2^k
    u = PeriodicField(np.cos(32 * x_of(128)))
    cut = cutoffs_for(u.shape)
    active = [
        k for k in range(cut.nblocks + 1)
        if np.abs(lp_block(u, k).values).max() > 1e-12
    ]
    assert active == [5]


def test_lowpass_is_partial_sum(rng):
    u = PeriodicField(rng.standard_normal(64))
    partial = sum(lp_block(u, l).values for l in range(4))
    assert np.abs(lowpass(u, 3).values - partial).max() < 1e-12
    assert np.abs(lowpass(u, -1).values).max() == 0.0


# ---------------------------------------------------------------------------
# paraproducts and the Bony decomposition
# ---------------------------------------------------------------------------


def test_paraproduct_kills_low_frequency():
    u = PeriodicField(np.cos(x_of(64)))
    a = PeriodicField(np.ones(64))
    assert np.abs(paraproduct(a, u).values).max() < 1e-13


def test_paraproduct_identity_on_high_frequency():
    for k in (16, 24):
        u = PeriodicField(np.cos(k * x_of(128)))
        a = PeriodicField(np.ones(128))
        assert np.abs(paraproduct(a, u).values - u.values).max() < 1e-12


def test_paraproduct_zero_symbol(rng):
    u = PeriodicField(rng.standard_normal(64))
    a = PeriodicField(np.zeros(64))
    assert np.abs(paraproduct(a, u).values).max() == 0.0


def test_bony_constant_factor(rng):
    c = 2.5
    u = PeriodicField.random_band_limited(rng, (64,), 10)
    a = PeriodicField(np.full(64, c))
    t_au, t_ua, rem = bony_decompose(a, u)
    assert np.abs(t_ua.values).max() < 1e-13
    assert np.abs(t_au.values + rem.values - c * u.values).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_bony_identity_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.choice([32, 64, 128]))
    a = PeriodicField(rng.standard_normal(n))
    u = PeriodicField(rng.standard_normal(n))
    t_au, t_ua, rem = bony_decompose(a, u)
    product = a.values * u.values
    err = np.abs(t_au.values + t_ua.values + rem.values - product).max()
    assert err < 1e-12 * max(1.0, np.abs(product).max())


def test_bony_low_modes_land_in_remainder():
    u = PeriodicField(np.cos(x_of(64)))
    t_au, t_ua, rem = bony_decompose(u, u)
    assert np.abs(t_au.values).max() < 1e-13
    assert np.abs(t_ua.values).max() < 1e-13
    assert np.abs(rem.values - u.values**2).max() < 1e-13


# ---------------------------------------------------------------------------
# paradifferential operators
# ---------------------------------------------------------------------------


def test_paradiff_pure_multiplier_high_mode():
    n = 128
    sym = abs_xi_symbol(1.0)
    for k in (16, 32):
        u = PeriodicField(np.cos(k * x_of(n)))
        out = paradiff_apply(sym, u)
        assert np.abs(out.values - k * u.values).max() < 1e-11 * k


def test_paradiff_identity_symbol_high_mode():
    n = 128
    one = multiplier_symbol(lambda xi: np.ones_like(np.asarray(xi, float)), 0.0)
    u = PeriodicField(np.cos(24 * x_of(n)))
    out = paradiff_apply(one, u)
    assert np.abs(out.values - u.values).max() < 1e-12


def test_paradiff_x_dependent_reduces_to_multiplier_when_constant():
    # an x-dependent sampler that happens to be constant in x must match the
    # multiplier fast path exactly on high modes
    n = 128
    sym_slow = SymbolSampler(order=1.0,
                             evaluator=lambda x, xi: np.abs(xi) * np.ones_like(x),
                             homogeneous=True, x_dependent=True)
    sym_fast = abs_xi_symbol(1.0)
    u = PeriodicField(np.cos(20 * x_of(n)))
    slow = paradiff_apply(sym_slow, u)
    fast = paradiff_apply(sym_fast, u)
    assert np.abs(slow.values - fast.values).max() < 1e-10


def test_paradiff_matrix_matches_apply(rng):
    n = 64
    sym = SymbolSampler(
        order=1.0,
        evaluator=lambda x, xi: (1.0 + 0.3 * np.cos(x)) * np.abs(xi),
        homogeneous=True,
    )
    mat = paradiff_matrix(sym, n)
    u = PeriodicField.random_band_limited(rng, (n,), 12)
    via_matrix = apply_matrix(mat, u)
    direct = paradiff_apply(sym, u)
    assert np.abs(via_matrix.values - direct.values).max() < 1e-10


def test_symbol_homogeneity_check():
    sym = abs_xi_symbol(1.0)
    xi = np.array([2.0, 4.0, 8.0])
    for t in (2.0, 4.0):
        assert np.allclose(sym(None, t * xi), t * sym(None, xi))


def test_symbol_error_on_nonfinite():
    from stripflow.errors import SymbolError

    bad = SymbolSampler(order=0.0, evaluator=lambda x, xi: np.full_like(
        np.asarray(xi, float), np.nan
    ))
    with pytest.raises(SymbolError):
        paradiff_apply(bad, PeriodicField(np.cos(8 * x_of(64))))


def test_boundedness_slope_order_one():
    # |T_a e_N| / N^m bounded: fitted log-log slope within m +- 0.1
    n = 512
    x = x_of(n)
    sym = SymbolSampler(
        order=1.0,
        evaluator=lambda xx, xi: (1.0 + 0.3 * np.cos(xx)) * np.abs(xi),
        homogeneous=True,
    )
    Ns = [8, 16, 32, 64, 128]
    norms = []
    for N in Ns:
        u = PeriodicField(np.cos(N * x))
        norms.append(paradiff_apply(sym, u).l2_norm())
    slope = np.polyfit(np.log(Ns), np.log(norms), 1)[0]
    assert abs(slope - 1.0) < 0.1


def test_boundedness_slope_order_half():
    n = 512
    x = x_of(n)
    sym = abs_xi_symbol(0.5)
    Ns = [8, 16, 32, 64, 128]
    norms = [
        paradiff_apply(sym, PeriodicField(np.cos(N * x))).l2_norm() for N in Ns
    ]
    slope = np.polyfit(np.log(Ns), np.log(norms), 1)[0]
    assert abs(slope - 0.5) < 0.1


def test_commutator_gain():
    # [T_p, T_u . grad] e_N grows with slope <= 1.1 for first-order
    # homogeneous p and smooth u: no derivative loss beyond order one
    n = 512
    x = x_of(n)
    p = abs_xi_symbol(1.0)
    u = PeriodicField(1.0 + 0.5 * np.cos(x))

    def advect(v):
        return paraproduct(u, v.deriv(0))

    Ns = [8, 16, 32, 64, 128]
    norms = []
    for N in Ns:
        e = PeriodicField(np.cos(N * x))
        comm = paradiff_apply(p, advect(e)) - advect(paradiff_apply(p, e))
        norms.append(comm.l2_norm() / e.l2_norm())
    slope = np.polyfit(np.log(Ns), np.log(norms), 1)[0]
    assert slope <= 1.1
