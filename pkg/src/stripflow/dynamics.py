"""Interface dynamics: the interface evolution operator and its energy budget,
linear stability of flat backgrounds, and the nonlinear incompressible
reference integrator.

Reference integrator formulation (d = 1).  The state is the interface height
f, one bulk vorticity field per phase carried on the fixed reference strips
(ALE form: the harmonic-coordinate map absorbs the interface motion), the
interface slip s = [u . tau], and the conserved bottom-wall circulation.  One
global stream function with transmission matching [psi] = 0,
[N . grad psi] = -s recovers the velocity, so the normal velocity is
continuous by construction and the kinematic condition dt f = u . N holds for
both phases simultaneously.  The slip evolves by the exact jump of the
tangential momentum equation (zero on compatibility-satisfying states); the
pressure comes from the two-phase transmission solve gauged to q(t) = 0.

In 2D the bulk vorticity is purely transported: D_t omega = 0 per phase.
"""

from dataclasses import dataclass

import numpy as np

from .dn import LambdaSymbol, paralinearization_remainder
from .errors import (
    BijectivityError,
    HyperbolicityLossError,
    InvalidFieldError,
    SimulationError,
    StepSizeError,
)
from .fields import PeriodicField
from .geometry import (
    InterfaceState,
    PhaseGeometry,
    SIDE_MINUS,
    SIDE_PLUS,
    flat_extension,
)
from .elliptic import (
    DIRICHLET,
    NEUMANN,
    SideSolver,
    TransmissionSolver,
    velocity_gradient_trace_source,
)
from .spectral import cutoffs_for, paradiff_apply
from .states import IncompressibleState, PhaseFields


# ---------------------------------------------------------------------------
# flat backgrounds and linear dispersion
# ---------------------------------------------------------------------------


@dataclass
class FlatBackground:
    """Hydrostatic rest state: constant densities, uniform body force -g e3,
    flat interface at height c."""

    rho_minus: float
    rho_plus: float
    g: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if not (self.rho_minus > 0 and self.rho_plus > 0):
            raise InvalidFieldError("densities must be positive")
        if not -1.0 < self.c < 1.0:
            raise InvalidFieldError("interface height outside the strip")

    @property
    def h_minus(self):
        return 1.0 + self.c

    @property
    def h_plus(self):
        return 1.0 - self.c

    def taylor_a(self):
        """Constant Taylor sign of the hydrostatic background."""
        return self.g * (self.rho_minus - self.rho_plus) / (
            self.rho_minus + self.rho_plus
        )


def linear_dispersion(bg: FlatBackground, k):
    """Two-layer dispersion about the hydrostatic background.

    omega2_exact uses the finite-depth per-phase DN symbols,
        omega^2 = g k (rho- - rho+) / (rho- coth(k h-) + rho+ coth(k h+)),
    omega2_principal is the leading interface-equation coefficient a |k|,
    and growth_rate = sqrt(-omega2_exact) when the square is negative.
    """
    k = int(k)
    out = {"k": k}
    if k == 0:
        out.update(
            omega2_exact=0.0, omega2_principal=0.0, growth_rate=0.0,
            zero_mode=True,
        )
        return out
    kk = abs(k)
    denom = bg.rho_minus / np.tanh(kk * bg.h_minus) + bg.rho_plus / np.tanh(
        kk * bg.h_plus
    )
    omega2_exact = bg.g * kk * (bg.rho_minus - bg.rho_plus) / denom
    omega2_principal = bg.taylor_a() * kk
    out.update(
        omega2_exact=float(omega2_exact),
        omega2_principal=float(omega2_principal),
        growth_rate=float(np.sqrt(max(-omega2_exact, 0.0))),
        zero_mode=False,
    )
    return out


# ---------------------------------------------------------------------------
# reference integrator
# ---------------------------------------------------------------------------


@dataclass
class SimState:
    """Reference-integrator state: interface, per-phase vorticity on the fixed
    reference strips, interface slip, wall circulation."""

    f: np.ndarray
    omega_minus: np.ndarray
    omega_plus: np.ndarray
    slip: np.ndarray
    alpha: float
    time: float = 0.0
    step: int = 0

    def copy(self):
        return SimState(
            f=self.f.copy(), omega_minus=self.omega_minus.copy(),
            omega_plus=self.omega_plus.copy(), slip=self.slip.copy(),
            alpha=self.alpha, time=self.time, step=self.step,
        )


@dataclass
class StageDiagnostics:
    """Everything the monitors need about one state, from one velocity and
    pressure recovery."""

    interface: InterfaceState
    geom_minus: PhaseGeometry
    geom_plus: PhaseGeometry
    u_minus: tuple
    u_plus: tuple
    p_minus: np.ndarray
    p_plus: np.ndarray
    psi_minus: np.ndarray
    psi_plus: np.ndarray
    dtf: np.ndarray
    dt2f: np.ndarray
    mean_u1: np.ndarray
    dt_mean_u1: np.ndarray
    a_field: np.ndarray
    p_trace: np.ndarray

    def incompressible_state(self, rho_m, rho_p, g):
        return IncompressibleState(
            minus=PhaseFields(geom=self.geom_minus, u1=self.u_minus[0],
                              u3=self.u_minus[1], p=self.p_minus),
            plus=PhaseFields(geom=self.geom_plus, u1=self.u_plus[0],
                             u3=self.u_plus[1], p=self.p_plus),
            rho_minus=rho_m, rho_plus=rho_p, g=g,
        )


_ddx_mult = {}


def _ddx(values):
    values = np.asarray(values, float)
    n = values.shape[-1]
    if n not in _ddx_mult:
        ik = 1j * np.fft.rfftfreq(n, d=1.0 / n) * 1.0
        ik[-1] = 0.0
        _ddx_mult[n] = ik
    return np.fft.irfft(np.fft.rfft(values) * _ddx_mult[n], n=n)


class ReferenceIntegrator:
    """RK4 time stepping of the sharp-interface two-phase incompressible
    system with the velocity/pressure recovery described above."""

    def __init__(self, rho_minus, rho_plus, g=0.0, nx=64, nz=33, f_star=0.0,
                 cfl=0.5, rtol=1e-10, dealias=True):
        self.rho_m = float(rho_minus)
        self.rho_p = float(rho_plus)
        self.g = float(g)
        self.nx = nx
        self.nz = nz
        self.f_star = float(f_star)
        self.cfl = cfl
        self.rtol = rtol
        self.dealias = dealias
        self._warm = {}
        self._mask = None

    # -- helpers ----------------------------------------------------------

    def _dealias(self, values):
        if not self.dealias:
            return values
        if self._mask is None:
            k = np.fft.rfftfreq(self.nx, d=1.0 / self.nx)
            self._mask = (k <= self.nx / 3.0).astype(float)
        vh = np.fft.rfft(values, axis=-1) * self._mask
        return np.fft.irfft(vh, n=self.nx, axis=-1)

    def geometry(self, f):
        interface = InterfaceState(f=f, ft=np.zeros_like(f), f_star=self.f_star)
        gm = PhaseGeometry(interface, SIDE_MINUS, self.nz)
        gp = PhaseGeometry(interface, SIDE_PLUS, self.nz)
        return interface, gm, gp

    def _stream_solve(self, gm, gp, state):
        solver = TransmissionSolver(gm, gp, 1.0, 1.0, wall_kind=DIRICHLET)
        psi_m, psi_p, x = solver.solve(
            state.omega_minus, state.omega_plus, value_jump=0.0,
            flux_jump=-state.slip, wall_data_m=0.0, wall_data_p=0.0,
            rtol=self.rtol, x0=self._warm.get("stream"),
        )
        self._warm["stream"] = x
        hm, hp, xh = solver.solve(
            0.0, 0.0, value_jump=0.0, flux_jump=0.0, wall_data_m=0.0,
            wall_data_p=1.0, rtol=self.rtol, x0=self._warm.get("harmonic"),
        )
        self._warm["harmonic"] = xh
        u1_m, u3_m = -gm.dz_phys(psi_m), gm.dx_phys(psi_m)
        u1h_m, u3h_m = -gm.dz_phys(hm), gm.dx_phys(hm)
        mean_h = float(np.mean(u1h_m[gm.wall_row]))
        beta = (state.alpha - float(np.mean(u1_m[gm.wall_row]))) / mean_h
        psi_m = psi_m + beta * hm
        psi_p = psi_p + beta * hp
        u_m = (u1_m + beta * u1h_m, u3_m + beta * u3h_m)
        u1_p, u3_p = -gp.dz_phys(psi_p), gp.dx_phys(psi_p)
        u_p = (u1_p, u3_p)
        return psi_m, psi_p, u_m, u_p

    def _pressure_solve(self, gm, gp, u_m, u_p, state, dtf):
        fx = gm.fx
        j2 = 1.0 + fx**2
        row_m, row_p = gm.interface_row, gp.interface_row
        tr_m = {"u1": u_m[0][row_m], "u3": u_m[1][row_m]}
        tr_p = {"u1": u_p[0][row_p], "u3": u_p[1][row_p]}
        mean1 = 0.5 * (tr_m["u1"] + tr_p["u1"])
        mean3 = 0.5 * (tr_m["u3"] + tr_p["u3"])
        ju1 = state.slip / j2
        ju3 = state.slip * fx / j2
        # [(1/rho) grad p] . N = -[u1 dx u] . N + [u] . dt N
        dxj1, dxj3 = _ddx(ju1), _ddx(ju3)
        dxm1, dxm3 = _ddx(mean1), _ddx(mean3)
        term1 = mean1 * (-fx * dxj1 + dxj3)
        term2 = ju1 * (-fx * dxm1 + dxm3)
        flux_jump = -(term1 + term2) - ju1 * _ddx(dtf)
        solver = TransmissionSolver(gm, gp, 1.0 / self.rho_m, 1.0 / self.rho_p,
                                    wall_kind=NEUMANN, gauge=True)
        src_m = -velocity_gradient_trace_source(gm, u_m[0], u_m[1])
        src_p = -velocity_gradient_trace_source(gp, u_p[0], u_p[1])
        p_m, p_p, x = solver.solve(
            src_m, src_p, value_jump=0.0, flux_jump=flux_jump,
            wall_data_m=-self.rho_m * self.g, wall_data_p=-self.rho_p * self.g,
            rtol=self.rtol, x0=self._warm.get("pressure"),
        )
        self._warm["pressure"] = x
        return p_m, p_p

    def _rhs(self, state, with_diagnostics=False):
        interface, gm, gp = self.geometry(state.f)
        psi_m, psi_p, u_m, u_p = self._stream_solve(gm, gp, state)
        # kinematic condition: dt f is the tangential derivative of the
        # stream-function trace, so the interface mean (phase area) is
        # conserved to rounding
        dtf = _ddx(psi_m[gm.interface_row])
        p_m, p_p = self._pressure_solve(gm, gp, u_m, u_p, state, dtf)
        fx = gm.fx
        j2 = 1.0 + fx**2
        row_m, row_p = gm.interface_row, gp.interface_row
        mean1 = 0.5 * (u_m[0][row_m] + u_p[0][row_p])
        mean3 = 0.5 * (u_m[1][row_m] + u_p[1][row_p])
        ptrace = 0.5 * (p_m[row_m] + p_p[row_p])
        # slip evolution: jump of the tangential momentum equation
        ju1 = state.slip / j2
        ju3 = state.slip * fx / j2
        fxx = _ddx(fx)
        dxs = _ddx(state.slip)
        dxm_tau = _ddx(mean1) + fx * _ddx(mean3)
        inv_rho_jump = 1.0 / self.rho_p - 1.0 / self.rho_m
        dts = (
            -mean1 * (dxs - ju3 * fxx)
            - ju1 * dxm_tau
            - inv_rho_jump * _ddx(ptrace)
            + ju3 * _ddx(dtf)
        )
        # ALE transport of the bulk vorticity on the fixed reference strips
        dphi_m = flat_extension(dtf, gm.grid.z, SIDE_MINUS, self.f_star)[0]
        dphi_p = flat_extension(dtf, gp.grid.z, SIDE_PLUS, self.f_star)[0]
        domega = {}
        dx_grid = 2.0 * np.pi / self.nx
        cfl_ratio = 0.0
        for key, geom, (u1, u3), om, dphi in (
            ("minus", gm, u_m, state.omega_minus, dphi_m),
            ("plus", gp, u_p, state.omega_plus, dphi_p),
        ):
            c1 = u1
            c2 = (-geom.phi_x * u1 + u3 - dphi) / geom.phi_z
            ox = geom.grid.ddx(om)
            oz = geom.grid.ddz(om)
            domega[key] = -self._dealias(c1 * ox + c2 * oz)
            dz = np.diff(geom.grid.z)
            local = np.empty(len(geom.grid.z))
            local[0], local[-1] = dz[0], dz[-1]
            local[1:-1] = np.minimum(dz[:-1], dz[1:])
            cfl_ratio = max(
                cfl_ratio,
                float(np.abs(c1).max()) / dx_grid,
                float((np.abs(c2) / local[:, None]).max()),
            )
        rhs = SimState(
            f=dtf,
            omega_minus=domega["minus"],
            omega_plus=domega["plus"],
            slip=self._dealias(dts),
            alpha=0.0,
            time=1.0,
            step=0,
        )
        if not with_diagnostics:
            return rhs, cfl_ratio
        # exact second time derivative of f for the budget machinery:
        # dt(u~ . N) with dt u~ = -u1 dx u~ - (grad p)/rho - g e3
        diag_sides = []
        for geom, (u1, u3), p, rho in (
            (gm, u_m, p_m, self.rho_m), (gp, u_p, p_p, self.rho_p),
        ):
            row = geom.interface_row
            px, pz = geom.grad_phys(p)
            tru1, tru3 = u1[row], u3[row]
            dtu1 = -tru1 * _ddx(tru1) - px[row] / rho
            dtu3 = -tru1 * _ddx(tru3) - pz[row] / rho - self.g
            dt2f_side = dtu3 - fx * dtu1 - tru1 * _ddx(dtf)
            diag_sides.append((dtu1, dtu3, dt2f_side))
        dt2f = 0.5 * (diag_sides[0][2] + diag_sides[1][2])
        dt_mean_u1 = 0.5 * (diag_sides[0][0] + diag_sides[1][0])
        rho_sum = self.rho_m + self.rho_p
        a_field = (gp.dz_phys(p_p)[row_p] - gm.dz_phys(p_m)[row_m]) / rho_sum
        interface = InterfaceState(f=state.f, ft=mean3, f_star=self.f_star)
        diags = StageDiagnostics(
            interface=interface, geom_minus=gm, geom_plus=gp, u_minus=u_m,
            u_plus=u_p, p_minus=p_m, p_plus=p_p, psi_minus=psi_m,
            psi_plus=psi_p, dtf=dtf, dt2f=dt2f, mean_u1=mean1,
            dt_mean_u1=dt_mean_u1, a_field=a_field, p_trace=ptrace,
        )
        return rhs, diags

    def diagnose(self, state) -> StageDiagnostics:
        _, diags = self._rhs(state, with_diagnostics=True)
        return diags

    # -- stepping ---------------------------------------------------------

    def _check_cfl(self, dt, cfl_ratio):
        if dt * cfl_ratio > self.cfl + 1e-12:
            raise StepSizeError(
                f"dt = {dt:.3e} violates CFL {self.cfl}: dt*max speed/spacing "
                f"= {dt * cfl_ratio:.3e}"
            )

    @staticmethod
    def _axpy(state, coef, rhs):
        return SimState(
            f=state.f + coef * rhs.f,
            omega_minus=state.omega_minus + coef * rhs.omega_minus,
            omega_plus=state.omega_plus + coef * rhs.omega_plus,
            slip=state.slip + coef * rhs.slip,
            alpha=state.alpha,
            time=state.time + coef,
            step=state.step,
        )

    def step(self, state: SimState, dt: float) -> SimState:
        """One explicit RK4 step; raises on CFL violation, interface escape,
        or harmonic-coordinate bijectivity loss."""
        try:
            k1, cfl_ratio = self._rhs(state)
            self._check_cfl(dt, cfl_ratio)
            k2, _ = self._rhs(self._axpy(state, 0.5 * dt, k1))
            k3, _ = self._rhs(self._axpy(state, 0.5 * dt, k2))
            k4, _ = self._rhs(self._axpy(state, dt, k3))
        except BijectivityError as exc:
            raise SimulationError(f"harmonic coordinates lost bijectivity: {exc}")
        new = SimState(
            f=state.f + dt / 6.0 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f),
            omega_minus=state.omega_minus + dt / 6.0 * (
                k1.omega_minus + 2 * k2.omega_minus + 2 * k3.omega_minus
                + k4.omega_minus
            ),
            omega_plus=state.omega_plus + dt / 6.0 * (
                k1.omega_plus + 2 * k2.omega_plus + 2 * k3.omega_plus
                + k4.omega_plus
            ),
            slip=state.slip + dt / 6.0 * (
                k1.slip + 2 * k2.slip + 2 * k3.slip + k4.slip
            ),
            alpha=state.alpha,
            time=state.time + dt,
            step=state.step + 1,
        )
        if new.f.min() <= -1.0 or new.f.max() >= 1.0:
            raise SimulationError(
                f"interface left the strip at t = {new.time:.4f}"
            )
        return new

    # -- integral monitors --------------------------------------------------

    def kinetic_energy(self, diags: StageDiagnostics) -> float:
        total = 0.0
        for geom, (u1, u3), rho in (
            (diags.geom_minus, diags.u_minus, self.rho_m),
            (diags.geom_plus, diags.u_plus, self.rho_p),
        ):
            total += 0.5 * rho * geom.integrate_phys(u1**2 + u3**2)
        return float(total)

    @staticmethod
    def lower_area(state: SimState) -> float:
        """Area of the lower phase per unit horizontal length: mean(f) + 1."""
        return float(np.mean(state.f)) + 1.0


def initial_wave_state(bg: FlatBackground, nx, nz, k, amplitude,
                       kind="standing", phase=0.0, alpha=0.0) -> SimState:
    """Small-amplitude interface wave over a flat background.

    standing: displaced interface at rest (f = amp cos(kx), no motion).
    traveling: the linear eigenmode moving right, with the matched slip.
    """
    x = 2.0 * np.pi * np.arange(nx) / nx
    f = bg.c + amplitude * np.cos(k * x + phase)
    shape_m = (nz, nx)
    state = SimState(
        f=f, omega_minus=np.zeros(shape_m), omega_plus=np.zeros(shape_m),
        slip=np.zeros(nx), alpha=alpha,
    )
    if kind == "standing" or k == 0:
        return state
    disp = linear_dispersion(bg, k)
    omega = float(np.sqrt(max(disp["omega2_exact"], 0.0)))
    if omega == 0.0:
        return state
    # psi trace from the kinematic condition dx(psi|_Gamma) = dt f
    # f = amp cos(kx - omega t): dt f = amp omega sin(kx) at t = 0
    # psi|_Gamma = -(amp omega / k) cos(kx)
    coef = amplitude * omega / k
    slip = coef * k * (
        1.0 / np.tanh(k * bg.h_plus) + 1.0 / np.tanh(k * bg.h_minus)
    ) * np.cos(k * x + phase)
    state.slip = slip
    return state


# ---------------------------------------------------------------------------
# model integrator: the paralinearized principal part as a dynamical system
# ---------------------------------------------------------------------------


class ModelIntegrator:
    """Evolves (f, D_t f) by the principal interface equation with frozen
    coefficients: dtt f = -a T_lambda f (+ frozen horizontal advection).

    Valid asymptotically; refuses amplitudes above a tenth of the smaller
    layer thickness."""

    def __init__(self, bg: FlatBackground, nx, advect_u=0.0):
        self.bg = bg
        self.nx = nx
        self.a = bg.taylor_a()
        self.advect_u = float(advect_u)
        cut = cutoffs_for((nx,))
        kmag = cut.kmag
        self.multiplier = kmag * cut.psi

    def _guard(self, f):
        limit = 0.1 * min(self.bg.h_minus, self.bg.h_plus)
        if np.abs(f - self.bg.c).max() > limit:
            raise SimulationError(
                f"model integrator amplitude exceeds guard {limit:.3f}"
            )

    def rhs(self, f, ft):
        dev = f - self.bg.c
        principal = np.fft.ifft(
            np.fft.fft(dev) * self.multiplier
        ).real
        dfdt = ft - self.advect_u * _ddx(f)
        dftdt = -self.a * principal - self.advect_u * _ddx(ft)
        return dfdt, dftdt

    def step(self, f, ft, dt):
        self._guard(f)
        k1 = self.rhs(f, ft)
        k2 = self.rhs(f + 0.5 * dt * k1[0], ft + 0.5 * dt * k1[1])
        k3 = self.rhs(f + 0.5 * dt * k2[0], ft + 0.5 * dt * k2[1])
        k4 = self.rhs(f + dt * k3[0], ft + dt * k3[1])
        fn = f + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        ftn = ft + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return fn, ftn


# ---------------------------------------------------------------------------
# interface acceleration decomposition
# ---------------------------------------------------------------------------


@dataclass
class AccelerationReport:
    principal: np.ndarray
    n_minus: np.ndarray
    n_plus: np.ndarray
    total: np.ndarray
    a_field: np.ndarray
    a_min: float
    hyperbolicity_lost: bool

    def parts(self):
        return {
            "principal": self.principal,
            "N_minus": self.n_minus,
            "N_plus": self.n_plus,
            "total": self.total,
        }


def interface_acceleration(integ: ReferenceIntegrator, state_or_diags,
                           rtol=1e-11) -> AccelerationReport:
    """Evaluate the interface evolution decomposition

        D_t^2 dbar_i f = -a T_lambda dbar_i f + N^+ + N^-

    on a simulation state: the principal Taylor-sign term plus the
    lower-order terms (auxiliary tangential-pressure solve, velocity-trace
    products, and the paralinearization remainders of the two DN operators).
    """
    diags = (
        state_or_diags
        if isinstance(state_or_diags, StageDiagnostics)
        else integ.diagnose(state_or_diags)
    )
    interface = diags.interface
    fxf = PeriodicField(interface.f).deriv(0)
    fx = fxf.values
    rho_sum = integ.rho_m + integ.rho_p
    lam = LambdaSymbol(interface)
    principal = -diags.a_field * paradiff_apply(lam, fxf).values
    n_terms = {}
    for name, geom, (u1, u3), p, rho in (
        ("minus", diags.geom_minus, diags.u_minus, diags.p_minus, integ.rho_m),
        ("plus", diags.geom_plus, diags.u_plus, diags.p_plus, integ.rho_p),
    ):
        row = geom.interface_row
        # auxiliary elliptic system for dbar_1 p
        hext = geom.harmonic_extension_values(geom.fx)
        hx, hz = geom.grad_phys(hext)
        lap_p = -rho * velocity_gradient_trace_source(geom, u1, u3)
        lap_x, lap_z = geom.grad_phys(lap_p)
        pz = geom.dz_phys(p)
        pzx, pzz = geom.grad_phys(pz)
        source = lap_x + hext * lap_z + 2.0 * (hx * pzx + hz * pzz)
        wall_data = -rho * integ.g * geom.dz_phys(hext)[geom.wall_row]
        solver = SideSolver(geom, DIRICHLET, NEUMANN)
        aux, _ = solver.solve(source, 0.0, wall_data, rtol=rtol)
        grad_n_dbar_p = geom.conormal_trace(aux)
        # velocity trace product: dbar_1 u_1 * D_t dbar_1 f
        tru1 = u1[row]
        dbar_u1 = _ddx(tru1)
        dt_dbar_f = _ddx(diags.dtf) + tru1 * _ddx(fx)
        # paralinearization remainder of this phase's DN operator
        rem = paralinearization_remainder(fxf, interface, geom.side, geom=geom,
                                          rtol=rtol)
        p3 = geom.dz_phys(p)[row]
        sign = -1.0 if geom.side == SIDE_PLUS else 1.0
        n_terms[name] = (
            -grad_n_dbar_p / rho_sum
            - 2.0 * rho / rho_sum * dbar_u1 * dt_dbar_f
            + sign * p3 / rho_sum * rem.values
        )
    total = principal + n_terms["minus"] + n_terms["plus"]
    a_min = float(diags.a_field.min())
    return AccelerationReport(
        principal=principal, n_minus=n_terms["minus"], n_plus=n_terms["plus"],
        total=total, a_field=diags.a_field, a_min=a_min,
        hyperbolicity_lost=bool(a_min < 0.0 < diags.a_field.max()),
    )


# ---------------------------------------------------------------------------
# interface energy budget (section-5 identity)
# ---------------------------------------------------------------------------


def _upsilon_power(values, s):
    """<d/dx>^s as a Fourier multiplier on interface functions."""
    n = len(values)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    weight = (1.0 + k**2) ** (s / 2.0)
    return np.fft.irfft(np.fft.rfft(values) * weight, n=n)


def _sqrt_lambda_apply(values):
    """T_sqrt(lambda) on interface functions (d = 1: multiplier sqrt|k| psi)."""
    n = len(values)
    cut = cutoffs_for((n,))
    kr = np.fft.rfftfreq(n, d=1.0 / n)
    mult = np.sqrt(kr) * cut.psi[: len(kr)]
    return np.fft.irfft(np.fft.rfft(values) * mult, n=n)


def _lambda_apply(values):
    n = len(values)
    cut = cutoffs_for((n,))
    kr = np.fft.rfftfreq(n, d=1.0 / n)
    mult = kr * cut.psi[: len(kr)]
    return np.fft.irfft(np.fft.rfft(values) * mult, n=n)


@dataclass
class BudgetRecord:
    time: float
    energy: float
    dE_dt: float
    terms: dict
    closure_defect: float
    relative_defect: float


def interface_energy_budget(integ: ReferenceIntegrator, window, dt,
                            kappa=4) -> BudgetRecord:
    """Evaluate the interface energy identity on three consecutive states.

    E_F = int |D_t F|^2 + a |T_sqrt(lambda) F|^2 with F = <dx>^(kappa-3/2)
    dbar_i f; dE_F/dt is measured by centered differences and compared with
    the six budget terms evaluated at the middle state.  All time derivatives
    inside the terms are exact (from the equations of motion) except D_t a,
    which uses the centered a-series.
    """
    s0, s1, s2 = window
    d0, d1, d2 = (integ.diagnose(s) for s in window)
    if d1.a_field.min() <= 0.0:
        raise HyperbolicityLossError(
            "Taylor sign nonpositive on the interface: weighted energy "
            "undefined"
        )
    s_exp = kappa - 1.5

    def F_of(d):
        return _upsilon_power(_ddx(d.interface.f), s_exp)

    def dtF_of(d):
        # exact: dt F = <dx>^s dx dt f; advective part with the mean trace
        val = _upsilon_power(_ddx(d.dtf), s_exp)
        return val + d.mean_u1 * _ddx(F_of(d))

    def energy_of(d):
        G = _sqrt_lambda_apply(F_of(d))
        return float(np.mean(dtF_of(d) ** 2 + d.a_field * G**2))

    E0, E1, E2 = (energy_of(d) for d in (d0, d1, d2))
    dE_dt = (E2 - E0) / (2.0 * dt)

    F = F_of(d1)
    dtF = dtF_of(d1)
    G = _sqrt_lambda_apply(F)
    ubar = d1.mean_u1
    dbar_u = _ddx(ubar)
    # D_t a: centered difference plus advection
    dta = (d2.a_field - d0.a_field) / (2.0 * dt) + ubar * _ddx(d1.a_field)
    I1 = 0.5 * float(
        np.mean(dbar_u * dtF**2 + (dbar_u * d1.a_field + dta) * G**2)
    )
    I2 = float(
        np.mean(
            d1.a_field
            * (_sqrt_lambda_apply(_sqrt_lambda_apply(F)) - _lambda_apply(F))
            * dtF
        )
    )
    # I3 = int [a D_t, T_sqrt(lambda)] F . G
    dtG_exact = _sqrt_lambda_apply(_upsilon_power(_ddx(d1.dtf), s_exp))
    dtG = dtG_exact + ubar * _ddx(G)
    I3 = float(np.mean((d1.a_field * dtG - _sqrt_lambda_apply(d1.a_field * dtF)) * G))

    # material derivatives of interface functions, exact through dt2f
    def Dt_of(g, dtg):
        return dtg + ubar * _ddx(g)

    gfun = _ddx(d1.interface.f)
    dt_g = _ddx(d1.dtf)
    dt2_g = _ddx(d1.dt2f)

    def Dt2_of(g, dtg, dt2g):
        # D_t^2 g = dtt g + dt u dx g + 2 u dx dt g + u dx(u dx g)
        return (
            dt2g
            + d1.dt_mean_u1 * _ddx(g)
            + 2.0 * ubar * _ddx(dtg)
            + ubar * _ddx(ubar * _ddx(g))
        )

    lhs_high = _upsilon_power(Dt2_of(gfun, dt_g, dt2_g), s_exp)
    rhs_high = Dt2_of(
        _upsilon_power(gfun, s_exp),
        _upsilon_power(dt_g, s_exp),
        _upsilon_power(dt2_g, s_exp),
    )
    I4 = -float(np.mean((lhs_high - rhs_high) * dtF))
    commut5 = _upsilon_power(d1.a_field * _lambda_apply(gfun), s_exp) - (
        d1.a_field * _lambda_apply(_upsilon_power(gfun, s_exp))
    )
    I5 = -float(np.mean(commut5 * dtF))
    accel = interface_acceleration(integ, d1)
    I6 = float(
        np.mean(_upsilon_power(accel.n_minus + accel.n_plus, s_exp) * dtF)
    )
    terms = {"I1": I1, "I2": I2, "I3": I3, "I4": I4, "I5": I5, "I6": I6}
    total = sum(terms.values())
    # the identity is for (1/2) d/dt E
    defect = abs(0.5 * dE_dt - total)
    scale = max(abs(v) for v in terms.values())
    return BudgetRecord(
        time=s1.time, energy=E1, dE_dt=dE_dt, terms=terms,
        closure_defect=defect,
        relative_defect=defect / scale if scale > 0 else float("inf"),
    )


# ---------------------------------------------------------------------------
# stability classification and transport diagnostics
# ---------------------------------------------------------------------------


@dataclass
class StabilityReport:
    label: str
    min_a: float
    margin: float
    tangential_residual: float
    rho_jump: float


def stability_classify(subject, integ: ReferenceIntegrator = None, c0=1e-8,
                       tangential_tol=1e-6) -> StabilityReport:
    """Classify a background or simulation state: neutral (Taylor sign
    bounded below by c0 and clean tangential pressure), rt_unstable (negative
    Taylor sign), kh_degenerate (tangential pressure gradient with a density
    jump), else marginal."""
    if isinstance(subject, FlatBackground):
        a_min = subject.taylor_a()
        rho_jump = subject.rho_plus - subject.rho_minus
        tangential = 0.0
    else:
        diags = subject if isinstance(subject, StageDiagnostics) else (
            integ.diagnose(subject)
        )
        a_min = float(diags.a_field.min())
        rho_jump = integ.rho_p - integ.rho_m
        dtrace = _ddx(diags.p_trace)
        tangential = float(np.sqrt(np.mean(dtrace**2)))
    if tangential > tangential_tol and rho_jump != 0.0:
        label = "kh_degenerate"
    elif a_min < 0.0:
        label = "rt_unstable"
    elif a_min >= c0:
        label = "neutral"
    else:
        label = "marginal"
    return StabilityReport(
        label=label, min_a=a_min, margin=a_min - c0,
        tangential_residual=tangential, rho_jump=rho_jump,
    )


def transport_diagnostics(state, interface=None, window=None, dt=None,
                          ddt_fields=None):
    """Residuals of the vorticity and entropy transport equations per phase.

    Either a (prev, cur, next) window of per-side field dicts with spacing dt
    or explicit Eulerian time derivatives ddt_fields must be supplied; for
    2D incompressible flow the vorticity residual is D_t omega alone.
    """
    report = {}
    for name in ("minus", "plus"):
        ph = getattr(state, name)
        geom = ph.geom
        u1, u3 = ph.u1, ph.u3
        om = geom.dx_phys(u3) - geom.dz_phys(u1)
        if ddt_fields is not None:
            dt_om = ddt_fields[name].get("omega", np.zeros_like(om))
        elif window is not None:
            prev, _, nxt = window
            dt_om = (nxt[name]["omega"] - prev[name]["omega"]) / (2.0 * dt)
        else:
            dt_om = np.zeros_like(om)
        ox, oz = geom.grad_phys(om)
        resid = dt_om + u1 * ox + u3 * oz
        if state.compressible:
            div = geom.dx_phys(u1) + geom.dz_phys(u3)
            rho = np.asarray(state.rho(SIDE_MINUS if name == "minus" else SIDE_PLUS))
            inv_rho = 1.0 / rho
            ix, iz = geom.grad_phys(inv_rho)
            px, pz = geom.grad_phys(ph.p)
            resid = resid + om * div + (ix * pz - iz * px)
            Sx, Sz = geom.grad_phys(ph.S)
            if ddt_fields is not None:
                dt_S = ddt_fields[name].get("S", np.zeros_like(om))
            elif window is not None:
                dt_S = (window[2][name]["S"] - window[0][name]["S"]) / (2.0 * dt)
            else:
                dt_S = np.zeros_like(om)
            report[f"entropy_{name}"] = float(
                np.sqrt(np.mean((dt_S + u1 * Sx + u3 * Sz)[1:-1] ** 2))
            )
        report[f"vorticity_{name}"] = float(np.sqrt(np.mean(resid[1:-1] ** 2)))
    return report


# ---------------------------------------------------------------------------
# measurement helpers
# ---------------------------------------------------------------------------


def mode_amplitude(f, k):
    coeff = np.fft.rfft(np.asarray(f, float)) / len(f)
    return 2.0 * abs(coeff[k]) if k else abs(coeff[0])


def fit_frequency(times, series):
    """Angular frequency of an oscillatory series by least-squares fit of a
    cosine with drifting phase (robust for clean signals)."""
    times = np.asarray(times)
    series = np.asarray(series)
    amp0 = np.abs(series).max()
    # refine by scanning around the FFT peak with a quadratic of the
    # least-squares misfit
    dt = times[1] - times[0]
    freqs = np.fft.rfftfreq(len(series), d=dt) * 2.0 * np.pi
    spec = np.abs(np.fft.rfft(series - series.mean()))
    w0 = freqs[np.argmax(spec)]
    span = freqs[1] if len(freqs) > 1 else 0.1
    candidates = np.linspace(max(w0 - 2 * span, 1e-6), w0 + 2 * span, 401)
    best = (np.inf, w0)
    for w in candidates:
        basis = np.column_stack([np.cos(w * times), np.sin(w * times),
                                 np.ones_like(times)])
        coef, res, *_ = np.linalg.lstsq(basis, series, rcond=None)
        misfit = np.sum((basis @ coef - series) ** 2)
        if misfit < best[0]:
            best = (misfit, w)
    return float(best[1])


def fit_growth_rate(times, amplitudes):
    """Exponential rate by linear regression of the log-amplitude."""
    times = np.asarray(times)
    logs = np.log(np.asarray(amplitudes))
    slope, _ = np.polyfit(times, logs, 1)
    return float(slope)
