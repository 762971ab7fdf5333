"""Two-phase state containers, equation of state, Rankine-Hugoniot and
compatibility validation, Taylor sign evaluation, and the energy monitors.

Interface traces are one-sided spectral evaluations at the interface
collocation line of each phase.  Jumps are [q] = q(plus) - q(minus).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IncompleteStateError,
    InvalidFieldError,
    ResolutionWarning,
    UnsupportedOrderError,
)
from .fields import PeriodicField
from .geometry import (
    InterfaceState,
    PhaseGeometry,
    SIDE_MINUS,
    SIDE_PLUS,
    StripField,
    pullback_h_norm,
)
from .spectral import sobolev_norm


def eos_density(p, S, A, gamma):
    """rho = A^(-1/gamma) p^(1/gamma) exp(-S/gamma)."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise InvalidFieldError("pressure must be positive for the state equation")
    out = A ** (-1.0 / gamma) * p ** (1.0 / gamma) * np.exp(-np.asarray(S) / gamma)
    return out if out.ndim else float(out)


def eos_pressure(rho, S, A, gamma):
    """Inverse state equation p = A rho^gamma exp(S)."""
    return A * np.asarray(rho, dtype=float) ** gamma * np.exp(np.asarray(S))


@dataclass
class PhaseFields:
    """Per-phase fields on the reference strip of one side."""

    geom: PhaseGeometry
    u1: np.ndarray
    u3: np.ndarray
    p: np.ndarray
    S: np.ndarray = None
    Dtp: np.ndarray = None
    Dt2p: np.ndarray = None

    def get(self, name):
        return getattr(self, name, None)

    def __getitem__(self, name):
        return getattr(self, name)


@dataclass
class CompressibleState:
    """Two-phase compressible state (p, u, S) with constants A > 0, gamma > 1."""

    minus: PhaseFields
    plus: PhaseFields
    A: float = 1.0
    gamma: float = 1.4
    g: float = 0.0

    def __post_init__(self):
        if not (self.A > 0.0 and self.gamma > 1.0):
            raise InvalidFieldError("state equation requires A > 0, gamma > 1")
        for side in (self.minus, self.plus):
            if side.S is None:
                raise IncompleteStateError("compressible state requires entropy")
            if np.any(side.p <= 0.0):
                raise InvalidFieldError("pressure must stay positive")

    compressible = True

    def phase(self, side):
        return self.minus if side == SIDE_MINUS else self.plus

    def eos_density(self, p, S):
        return eos_density(p, S, self.A, self.gamma)

    def rho(self, side):
        ph = self.phase(side)
        return self.eos_density(ph.p, ph.S)


@dataclass
class IncompressibleState:
    """Two-phase incompressible state (u, p) with constant densities."""

    minus: PhaseFields
    plus: PhaseFields
    rho_minus: float = 1.0
    rho_plus: float = 1.0
    g: float = 0.0

    compressible = False

    def __post_init__(self):
        if not (self.rho_minus > 0.0 and self.rho_plus > 0.0):
            raise InvalidFieldError("densities must be positive")

    def phase(self, side):
        return self.minus if side == SIDE_MINUS else self.plus

    def rho(self, side):
        ph = self.phase(side)
        const = self.rho_minus if side == SIDE_MINUS else self.rho_plus
        return np.full_like(ph.p, const)

    def divergence_defect(self):
        out = {}
        for name, side in (("minus", SIDE_MINUS), ("plus", SIDE_PLUS)):
            ph = self.phase(side)
            div = ph.geom.dx_phys(ph.u1) + ph.geom.dz_phys(ph.u3)
            out[name] = float(np.abs(div).max())
        return out


def _interface_state(state) -> InterfaceState:
    return state.minus.geom.interface


def _global_stream_velocity(geom, amplitude):
    """Divergence-free velocity from a globally smooth stream function that is
    constant on both walls; evaluated in physical coordinates so the two
    phases carry traces of one continuous field."""
    X, Z = geom.grid.xx, geom.phi
    u1 = -amplitude * (np.pi / 2.0) * np.sin(X) * np.cos(np.pi * (Z + 1.0) / 2.0)
    u3 = amplitude * np.cos(X) * np.sin(np.pi * (Z + 1.0) / 2.0)
    return u1, u3


def hydrostatic_entropy_wave(interface: InterfaceState, nz, rho_minus,
                             rho_plus, g, u_amplitude=0.0, p0=None,
                             compressible=False, A=1.0, gamma=1.4):
    """Construct an exactly compatible two-density state over a (possibly
    curved) interface: pressure p = rho g (f(x) - z) + p0 per phase, a shared
    globally smooth divergence-free velocity, and (compressible case) the
    entropy field that makes the equation of state return the two constant
    densities.

    The construction satisfies [p] = [u] = 0, dbar p = 0 on the interface and
    the substituted compatibility conditions exactly, while [rho] != 0.
    """
    gm = PhaseGeometry(interface, SIDE_MINUS, nz)
    gp = PhaseGeometry(interface, SIDE_PLUS, nz)
    f = interface.f
    phases = {}
    for geom, rho in ((gm, rho_minus), (gp, rho_plus)):
        u1, u3 = _global_stream_velocity(geom, u_amplitude)
        pressure = rho * g * (f[None, :] - geom.phi)
        if p0 is not None:
            pressure = pressure + p0
        fields = dict(geom=geom, u1=u1, u3=u3, p=pressure)
        if compressible:
            fields["S"] = np.log(pressure / (A * rho**gamma))
        phases[geom.side] = PhaseFields(**fields)
    # kinematic ft = u3 trace (single-valued: the stream field is global)
    ft = phases[SIDE_MINUS].u3[gm.interface_row]
    interface.ft = ft.copy()
    if compressible:
        return CompressibleState(minus=phases[SIDE_MINUS],
                                 plus=phases[SIDE_PLUS], A=A, gamma=gamma, g=g)
    return IncompressibleState(minus=phases[SIDE_MINUS], plus=phases[SIDE_PLUS],
                               rho_minus=rho_minus, rho_plus=rho_plus, g=g)


def interface_traces(state):
    """One-sided traces on Gamma_f of u, p, rho (and S when present)."""
    traces = {}
    for name, side in (("minus", SIDE_MINUS), ("plus", SIDE_PLUS)):
        ph = state.phase(side)
        row = ph.geom.interface_row
        entry = {
            "u1": ph.u1[row].copy(),
            "u3": ph.u3[row].copy(),
            "p": ph.p[row].copy(),
            "rho": np.asarray(state.rho(side))[row].copy(),
            "dp3": ph.geom.dz_phys(ph.p)[row].copy(),
            "dpN": ph.geom.conormal_trace(ph.p),
        }
        if getattr(ph, "S", None) is not None:
            entry["S"] = ph.S[row].copy()
        traces[name] = entry
    return traces


@dataclass
class DiscontinuityReport:
    label: str
    m_N: dict
    jumps: dict
    tolerances: dict


def classify_discontinuity(state, interface: InterfaceState = None,
                           zero_tol=1e-6, nonzero_tol=1e-2) -> DiscontinuityReport:
    """Classify the interface data as shock / vortex_sheet / entropy_wave /
    continuous from the Rankine-Hugoniot trace quantities.

    zero_tol separates discretization noise from physical jumps; nonzero_tol
    is the "bounded away from zero" threshold for the density/entropy jumps
    of a positive entropy-wave identification.
    """
    if interface is None:
        interface = _interface_state(state)
    tr = interface_traces(state)
    fx = interface.fx()
    dtf_guess = {}
    jumps = {}
    for name in ("minus", "plus"):
        t = tr[name]
        uN = t["u3"] - fx * t["u1"]
        t["uN"] = uN
        t["utau"] = t["u1"] + fx * t["u3"]
    # dt f from the kinematic relation u3 = D_t f (mean of the two sides)
    dtf = interface.ft - 0.5 * (tr["minus"]["u1"] + tr["plus"]["u1"]) * fx
    m_N = {
        name: tr[name]["rho"] * (tr[name]["uN"] - dtf) for name in ("minus", "plus")
    }
    def jump(key):
        return tr["plus"][key] - tr["minus"][key]

    jumps["p"] = float(np.abs(jump("p")).max())
    jumps["uN"] = float(np.abs(jump("uN")).max())
    jumps["utau"] = float(np.abs(jump("utau")).max())
    jumps["u"] = max(
        float(np.abs(jump("u1")).max()), float(np.abs(jump("u3")).max())
    )
    jumps["rho"] = float(np.abs(jump("rho")).max())
    if "S" in tr["minus"] and "S" in tr["plus"]:
        jumps["S"] = float(np.abs(jump("S")).max())
    m_scale = max(np.abs(m_N["minus"]).max(), np.abs(m_N["plus"]).max())
    scale = max(
        1.0,
        np.abs(tr["minus"]["p"]).max(),
        np.abs(tr["minus"]["rho"]).max(),
    )
    if m_scale > zero_tol * scale:
        label = "shock"
    elif jumps["p"] <= zero_tol * scale and jumps["uN"] <= zero_tol * scale:
        if jumps["utau"] > zero_tol * scale:
            label = "vortex_sheet"
        elif jumps["rho"] >= nonzero_tol and jumps.get("S", jumps["rho"]) >= (
            nonzero_tol if "S" in jumps else 0.0
        ):
            label = "entropy_wave"
        elif jumps["rho"] <= zero_tol * scale:
            label = "continuous"
        else:
            label = "indeterminate"
    else:
        label = "indeterminate"
    return DiscontinuityReport(
        label=label,
        m_N={k: float(np.abs(v).max()) for k, v in m_N.items()},
        jumps=jumps,
        tolerances={"zero": zero_tol, "nonzero": nonzero_tol},
    )


def _material_derivatives_compressible(state, side, order):
    """Substitute D_t from the equations: D_t p = -gamma p div u,
    D_t u = -grad p / rho (- g e3), and one further substitution for order 2.

    Returns dicts of per-order fields: {l: {"p": ..., "u1": ..., "u3": ...}}.
    """
    ph = state.phase(side)
    geom = ph.geom
    rho = np.asarray(state.rho(side))
    p, u1, u3 = ph.p, ph.u1, ph.u3
    px, pz = geom.grad_phys(p)
    div = geom.dx_phys(u1) + geom.dz_phys(u3)
    out = {0: {"p": p, "u1": u1, "u3": u3}}
    if order >= 1:
        gamma = state.gamma if state.compressible else None
        dtp = -gamma * p * div if state.compressible else np.zeros_like(p)
        dtu1 = -px / rho
        dtu3 = -pz / rho - state.g
        out[1] = {"p": dtp, "u1": dtu1, "u3": dtu3}
    if order >= 2:
        if not state.compressible:
            raise UnsupportedOrderError(
                "order-2 substitution needs the compressible equations"
            )
        gamma = state.gamma
        dtp = out[1]["p"]
        dtpx, dtpz = geom.grad_phys(dtp)
        u1x, u1z = geom.grad_phys(u1)
        u3x, u3z = geom.grad_phys(u3)
        # D_t(div u) = div(D_t u) - tr((grad u)^2)
        dtu1x, dtu1z = geom.grad_phys(out[1]["u1"])
        dtu3x, dtu3z = geom.grad_phys(out[1]["u3"])
        tr2 = u1x**2 + 2.0 * u1z * u3x + u3z**2
        dt_div = dtu1x + dtu3z - tr2
        dt2p = -gamma * (dtp * div + p * dt_div)
        # D_t^2 u = -D_t((1/rho) grad p)
        # with D_t rho = -rho div u and D_t(grad p) = grad D_t p - (grad u)^T grad p
        dt2u1 = -(div / rho) * px - (dtpx - (u1x * px + u3x * pz)) / rho
        dt2u3 = -(div / rho) * pz - (dtpz - (u1z * px + u3z * pz)) / rho
        out[2] = {"p": dt2p, "u1": dt2u1, "u3": dt2u3}
    return out


def check_compatibility(state, interface: InterfaceState = None, order: int = 1):
    """Jump norms of [D_t^l p] and [D_t^l u] on the interface, l <= order,
    with material derivatives substituted from the equations.

    Incompressible states support order <= 1 (the pressure is not
    evolutionary); compressible states support order <= 2.
    """
    if interface is None:
        interface = _interface_state(state)
    max_order = 2 if state.compressible else 1
    if order < 0 or order > 2:
        raise UnsupportedOrderError("compatibility order must be 0, 1, or 2")
    if order > max_order:
        raise UnsupportedOrderError(
            f"order {order} unsupported for this state (max {max_order})"
        )
    subs = {
        side: _material_derivatives_compressible(state, side, order)
        for side in (SIDE_MINUS, SIDE_PLUS)
    }
    report = {}
    for l in range(order + 1):
        row_m = state.minus.geom.interface_row
        row_p = state.plus.geom.interface_row
        for name in ("p", "u1", "u3"):
            jm = subs[SIDE_PLUS][l][name][row_p] - subs[SIDE_MINUS][l][name][row_m]
            report[f"Dt{l}_{name}"] = float(np.sqrt(np.mean(jm**2)))
        report[f"Dt{l}_u"] = max(report[f"Dt{l}_u1"], report[f"Dt{l}_u3"])
    return report


def tangential_pressure_check(state, interface: InterfaceState = None,
                              tol: float = 1e-6):
    """Interface tangential pressure gradient norm, the extracted gauge q(t),
    and the Kelvin-Helmholtz degeneration flag.

    The trace of the tangential derivative of p is the x-derivative of the
    interface trace of p, computed spectrally.
    """
    if interface is None:
        interface = _interface_state(state)
    out = {}
    worst = 0.0
    q_vals = []
    for name, side in (("minus", SIDE_MINUS), ("plus", SIDE_PLUS)):
        ph = state.phase(side)
        ptrace = ph.p[ph.geom.interface_row]
        dtrace = PeriodicField(ptrace).deriv(0).values
        norm = float(np.sqrt(np.mean(dtrace**2)))
        out[f"tangential_{name}"] = norm
        worst = max(worst, norm)
        q_vals.append(float(np.mean(ptrace)))
    rho_jump = _rho_jump(state)
    out["max_tangential"] = worst
    out["q"] = 0.5 * (q_vals[0] + q_vals[1])
    out["kh_degenerate"] = bool(worst > tol and abs(rho_jump) > 0.0)
    out["passes"] = bool(worst <= tol)
    return out


def _rho_jump(state):
    rm = np.asarray(state.rho(SIDE_MINUS))[state.minus.geom.interface_row]
    rp = np.asarray(state.rho(SIDE_PLUS))[state.plus.geom.interface_row]
    return float(np.mean(rp) - np.mean(rm))


@dataclass
class TaylorSignReport:
    a: np.ndarray
    min: float
    a_conormal: np.ndarray
    formula_gap: float


def taylor_sign(state, interface: InterfaceState = None,
                check_tol: float = 1e-8) -> TaylorSignReport:
    """Taylor sign field a = [d3 p] / (rho+ + rho-), with the equivalent
    co-normal form [grad_N p] / ((rho+ + rho-)(1 + |grad f|^2)).

    The two formulas agree identically when the tangential pressure gradient
    vanishes on the interface; the gap between them is reported.
    """
    if interface is None:
        interface = _interface_state(state)
    tr = interface_traces(state)
    rho_sum = tr["plus"]["rho"] + tr["minus"]["rho"]
    a_vertical = (tr["plus"]["dp3"] - tr["minus"]["dp3"]) / rho_sum
    fx = interface.fx()
    a_conormal = (tr["plus"]["dpN"] - tr["minus"]["dpN"]) / (
        rho_sum * (1.0 + fx**2)
    )
    gap = float(np.abs(a_vertical - a_conormal).max())
    return TaylorSignReport(
        a=a_vertical,
        min=float(a_vertical.min()),
        a_conormal=a_conormal,
        formula_gap=gap,
    )


@dataclass
class EnergyReport:
    kappa: int
    truncation: int
    interface: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)

    def total(self):
        return sum(self.interface.values()) + sum(self.domain.values())

    def entries(self):
        out = dict(self.interface)
        out.update(self.domain)
        return out


def energy_norm(state, interface: InterfaceState = None, kappa: int = 4,
                trunc: int = None, lower_order: bool = False) -> EnergyReport:
    """Energy monitor: interface Sobolev norms plus per-phase domain norms
    with material derivatives substituted up to the truncation order.

    lower_order=True computes the companion lower-order norm (every domain
    order reduced by one, interface terms dropped)."""
    if interface is None:
        interface = _interface_state(state)
    max_trunc = 2 if state.compressible else 1
    if trunc is None:
        trunc = max_trunc
    trunc = min(trunc, max_trunc)
    if interface.nx < 2 * kappa:
        warnings.warn(
            f"grid nx = {interface.nx} under-resolves H^{kappa} monitors",
            ResolutionWarning,
        )
    report = EnergyReport(kappa=kappa, truncation=trunc)
    if not lower_order:
        report.interface["f_Hk"] = sobolev_norm(interface.f_field(), float(kappa))
        report.interface["Dtf_Hk_half"] = sobolev_norm(
            interface.ft_field(), kappa - 0.5
        )

    def order_of(fname, l):
        if lower_order:
            return max(kappa - 1 if l == 0 else kappa - l, 0)
        if l == 0:
            return kappa
        if fname.startswith("u"):
            return max(kappa - 1 if l == 1 else kappa + 1 - l, 0)
        return max(kappa + 1 - l, 0)

    subs = {
        side: _material_derivatives_compressible(state, side, trunc)
        for side in (SIDE_MINUS, SIDE_PLUS)
    }
    for name, side in (("minus", SIDE_MINUS), ("plus", SIDE_PLUS)):
        geom = state.phase(side).geom
        for l in range(trunc + 1):
            for fname in ("p", "u1", "u3") + (("S",) if state.compressible else ()):
                if l > 0 and fname == "p" and not state.compressible:
                    continue
                if fname == "S":
                    # D_t S = 0 exactly: higher substitutions vanish
                    arr = state.phase(side).S if l == 0 else np.zeros_like(
                        state.phase(side).S
                    )
                else:
                    arr = subs[side][l][fname]
                order = order_of(fname, l)
                key = f"{'Dt%d_' % l if l else ''}{fname}_H{order}_{name}"
                report.domain[key] = pullback_h_norm(StripField(geom, arr), order)
    return report
