"""Variable-coefficient Laplace solves on the curved phase domains, the
div-curl velocity recovery, and the pressure solvers.

Problems on a curved domain Omega_f are pulled back through the harmonic
coordinates to the flat reference strip, where Delta_y v = s becomes the
divergence-form equation div(B grad w) = J s with

    B11 = phi_z,  B12 = -phi_x,  B22 = (1 + phi_x^2) / phi_z,  J = phi_z.

Discretization is Fourier collocation in x and Chebyshev-Lobatto collocation
in z; boundary rows are replaced by the boundary conditions.  The system is
solved by GMRES preconditioned with the exact per-Fourier-mode factorization
of the flat-strip operator (cached per grid and boundary signature), so
flat-interface problems converge to machine precision in one iteration.

All-Neumann configurations are gauged by replacing the x-mean of one wall
condition with a value pin; without an explicit gauge request they raise.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (
    GaugeError,
    GridMismatchError,
    IncompatibleDataError,
    IncompleteStateError,
    SolverError,
)
from .geometry import SIDE_MINUS, InterfaceState, PhaseGeometry, StripField

DIRICHLET = "dirichlet"
NEUMANN = "neumann"  # physical vertical derivative on a wall
CONORMAL = "conormal"  # N . grad on the interface


def _boundary_row(geom, w, wx, wz, row, kind):
    if kind == DIRICHLET:
        return w[row]
    if kind == NEUMANN:
        return wz[row] / geom.phi_z[row]
    if kind == CONORMAL:
        px = wx[row] - (geom.phi_x[row] / geom.phi_z[row]) * wz[row]
        pz = wz[row] / geom.phi_z[row]
        return -geom.fx * px + pz
    raise ValueError(f"unknown boundary kind {kind!r}")


def _side_residual(geom, w, iface_kind, wall_kind, coeff=1.0):
    """Interior rows: coeff * div(B grad w); boundary rows per kind."""
    grid = geom.grid
    b11, b12, b22 = geom.coeff_B()
    wx = grid.ddx(w)
    wz = grid.ddz(w)
    q1 = b11 * wx + b12 * wz
    q2 = b12 * wx + b22 * wz
    res = coeff * (grid.ddx(q1) + grid.ddz(q2))
    res[geom.interface_row] = _boundary_row(
        geom, w, wx, wz, geom.interface_row, iface_kind
    )
    res[geom.wall_row] = _boundary_row(geom, w, wx, wz, geom.wall_row, wall_kind)
    return res


def _flat_mode_matrix(grid, side, iface_kind, wall_kind, theta, coeff=1.0):
    nz = grid.nz
    D = grid.cheb.D
    if theta == grid.nx // 2:
        # the Nyquist x-mode is unresolvable for real fields (odd x-derivatives
        # vanish); the whole system pins it to zero
        return np.eye(nz)
    A = coeff * (grid.cheb.D2 - theta**2 * np.eye(nz))
    irow = nz - 1 if side == SIDE_MINUS else 0
    wrow = 0 if side == SIDE_MINUS else nz - 1
    for row, kind in ((irow, iface_kind), (wrow, wall_kind)):
        A[row] = 0.0
        if kind == DIRICHLET:
            A[row, row] = 1.0
        else:  # NEUMANN and CONORMAL both reduce to d/dz on the flat strip
            A[row] = D[row]
    return A


_nyquist_patterns = {}


def _nyquist_pattern(nx):
    if nx not in _nyquist_patterns:
        _nyquist_patterns[nx] = (-1.0) ** np.arange(nx)
    return _nyquist_patterns[nx]


def _strip_nyquist(values):
    """Zero the Nyquist x-mode in place; returns the removed mode amplitude."""
    pattern = _nyquist_pattern(values.shape[1])
    coef = values @ pattern / values.shape[1]
    values -= np.outer(coef, pattern)
    return coef


def _restore_nyquist(values, coef):
    pattern = _nyquist_pattern(values.shape[1])
    values += np.outer(coef, pattern)


_flat_cache = {}


def _flat_inverses(key, builder):
    if key not in _flat_cache:
        _flat_cache[key] = np.linalg.inv(builder())
    return _flat_cache[key]


def _run_gmres(matvec, precond, b, rtol, x0, context):
    """GMRES on the explicitly left-preconditioned system M^-1 A x = M^-1 b.

    With M the exact flat-strip solve, the preconditioned residual has
    solution-error semantics, so rtol controls the accuracy of x directly
    (raw residuals scale with the O(nz^4) interior row norms and are not a
    usable stopping quantity in double precision).
    """
    n = b.size
    pb = precond(b)
    op = LinearOperator((n, n), matvec=lambda v: precond(matvec(v)), dtype=float)
    bnorm = np.linalg.norm(pb)
    atol = max(rtol * bnorm, 1e-300)
    x, info = gmres(op, pb, x0=x0, rtol=rtol, atol=atol, restart=80, maxiter=30)
    resid = np.linalg.norm(precond(matvec(x)) - pb)
    if resid > 100.0 * max(atol, 1e-14 * max(bnorm, 1.0)):
        raise SolverError(
            f"{context}: GMRES stalled, preconditioned residual {resid:.3e} "
            f"vs target {atol:.3e} (info={info})"
        )
    return x


class SideSolver:
    """GMRES solve of one phase's pulled-back problem."""

    def __init__(self, geom: PhaseGeometry, iface_kind, wall_kind, gauge=False):
        self.geom = geom
        self.iface_kind = iface_kind
        self.wall_kind = wall_kind
        both_neumann = iface_kind != DIRICHLET and wall_kind != DIRICHLET
        if both_neumann and not gauge:
            raise GaugeError(
                "all-Neumann boundary configuration requires a gauge condition"
            )
        self.gauge = gauge and both_neumann
        grid = geom.grid
        self.nx, self.nz = grid.nx, grid.nz
        self.nxr = self.nx // 2 + 1
        key = (
            "side", self.nx, self.nz, geom.side,
            round(geom.interface.f_star, 14), iface_kind, wall_kind, self.gauge,
        )

        def build():
            mats = np.empty((self.nxr, self.nz, self.nz))
            for m in range(self.nxr):
                A = _flat_mode_matrix(grid, geom.side, iface_kind, wall_kind,
                                      float(m))
                if self.gauge and m == 0:
                    A[geom.wall_row] = 0.0
                    A[geom.wall_row, geom.wall_row] = 1.0
                mats[m] = A
            return mats

        self.flat_inv = _flat_inverses(key, build)

    def _matvec(self, vec):
        geom = self.geom
        w = vec.reshape(self.nz, self.nx).copy()
        nyq = _strip_nyquist(w)
        res = _side_residual(geom, w, self.iface_kind, self.wall_kind)
        if self.gauge:
            row = res[geom.wall_row]
            res[geom.wall_row] = row - row.mean() + w[geom.wall_row].mean()
        _restore_nyquist(res, nyq)
        return res.ravel()

    def _precond(self, vec):
        rhat = np.fft.rfft(vec.reshape(self.nz, self.nx), axis=1)
        out = np.einsum("kij,jk->ik", self.flat_inv, rhat)
        return np.fft.irfft(out, n=self.nx, axis=1).ravel()

    def solve(self, source, iface_data, wall_data, rtol=1e-12, x0=None):
        """Solve Delta_y v = source with the configured boundary data.

        All data are physical samples on the reference grid; returns
        reference-strip samples of shape (nz, nx) and the raw vector for
        warm starts.
        """
        geom = self.geom
        rhs = np.zeros((self.nz, self.nx))
        if np.ndim(source):
            rhs[:] = geom.phi_z * source
        rhs[geom.interface_row] = iface_data
        rhs[geom.wall_row] = wall_data
        if self.gauge:
            row = rhs[geom.wall_row]
            rhs[geom.wall_row] = row - row.mean()
        _strip_nyquist(rhs)
        x = _run_gmres(self._matvec, self._precond, rhs.ravel(), rtol, x0,
                       "side solve")
        return x.reshape(self.nz, self.nx), x


class TransmissionSolver:
    """Coupled two-phase solve: per-side equations c div(B grad w) = J s with
    interface matching  [w] = value_jump  and  [c N.grad w] = flux_jump."""

    def __init__(self, geom_m: PhaseGeometry, geom_p: PhaseGeometry,
                 coeff_m=1.0, coeff_p=1.0, wall_kind=DIRICHLET, gauge=False):
        if geom_m.grid.nx != geom_p.grid.nx or geom_m.grid.nz != geom_p.grid.nz:
            raise GridMismatchError("transmission requires matching grids")
        self.gm, self.gp = geom_m, geom_p
        self.cm, self.cp = float(coeff_m), float(coeff_p)
        self.wall_kind = wall_kind
        if wall_kind != DIRICHLET and not gauge:
            raise GaugeError("Neumann walls on both phases require a gauge")
        self.gauge = gauge and wall_kind != DIRICHLET
        self.nx = geom_m.grid.nx
        self.nz = geom_m.grid.nz
        self.nxr = self.nx // 2 + 1
        key = (
            "transmission", self.nx, self.nz,
            round(geom_m.interface.f_star, 14), wall_kind,
            round(self.cm, 14), round(self.cp, 14), self.gauge,
        )

        def build():
            nz = self.nz
            mats = np.empty((self.nxr, 2 * nz, 2 * nz))
            Dm = self.gm.grid.cheb.D
            Dp = self.gp.grid.cheb.D
            irow_m, irow_p = nz - 1, 0
            wrow_m, wrow_p = 0, nz - 1
            for m in range(self.nxr):
                if m == self.nx // 2:
                    mats[m] = np.eye(2 * nz)
                    continue
                theta_sq = float(m) ** 2
                A = np.zeros((2 * nz, 2 * nz))
                A[:nz, :nz] = self.cm * (
                    self.gm.grid.cheb.D2 - theta_sq * np.eye(nz)
                )
                A[nz:, nz:] = self.cp * (
                    self.gp.grid.cheb.D2 - theta_sq * np.eye(nz)
                )
                for row, D, block in ((wrow_m, Dm, 0), (wrow_p, Dp, nz)):
                    A[block + row, :] = 0.0
                    if self.wall_kind == DIRICHLET:
                        A[block + row, block + row] = 1.0
                    else:
                        A[block + row, block:block + nz] = D[row]
                A[irow_m, :] = 0.0
                A[irow_m, irow_m] = -1.0
                A[irow_m, nz + irow_p] = 1.0
                A[nz + irow_p, :] = 0.0
                A[nz + irow_p, :nz] = -self.cm * Dm[irow_m]
                A[nz + irow_p, nz:] = self.cp * Dp[irow_p]
                if self.gauge and m == 0:
                    A[wrow_m, :] = 0.0
                    A[wrow_m, irow_m] = 1.0  # pin interface value of minus side
                mats[m] = A
            return mats

        self.flat_inv = _flat_inverses(key, build)

    def _matvec(self, vec):
        nz, nx = self.nz, self.nx
        half = nz * nx
        wm = vec[:half].reshape(nz, nx).copy()
        wp = vec[half:].reshape(nz, nx).copy()
        nyq_m = _strip_nyquist(wm)
        nyq_p = _strip_nyquist(wp)
        rm = _side_residual(self.gm, wm, DIRICHLET, self.wall_kind, self.cm)
        rp = _side_residual(self.gp, wp, DIRICHLET, self.wall_kind, self.cp)
        rm[self.gm.interface_row] = (
            wp[self.gp.interface_row] - wm[self.gm.interface_row]
        )
        rp[self.gp.interface_row] = self.cp * self.gp.conormal_trace(
            wp
        ) - self.cm * self.gm.conormal_trace(wm)
        if self.gauge:
            row = rm[self.gm.wall_row]
            rm[self.gm.wall_row] = (
                row - row.mean() + wm[self.gm.interface_row].mean()
            )
        _restore_nyquist(rm, nyq_m)
        _restore_nyquist(rp, nyq_p)
        return np.concatenate([rm.ravel(), rp.ravel()])

    def _precond(self, vec):
        nz, nx = self.nz, self.nx
        half = nz * nx
        stacked = np.concatenate(
            [
                np.fft.rfft(vec[:half].reshape(nz, nx), axis=1),
                np.fft.rfft(vec[half:].reshape(nz, nx), axis=1),
            ],
            axis=0,
        )
        out = np.einsum("kij,jk->ik", self.flat_inv, stacked)
        return np.concatenate(
            [
                np.fft.irfft(out[:nz], n=nx, axis=1).ravel(),
                np.fft.irfft(out[nz:], n=nx, axis=1).ravel(),
            ]
        )

    def solve(self, source_m, source_p, value_jump=0.0, flux_jump=0.0,
              wall_data_m=0.0, wall_data_p=0.0, rtol=1e-12, x0=None):
        nz, nx = self.nz, self.nx
        rhs_m = np.zeros((nz, nx))
        rhs_p = np.zeros((nz, nx))
        if np.ndim(source_m):
            rhs_m[:] = self.gm.phi_z * source_m
        if np.ndim(source_p):
            rhs_p[:] = self.gp.phi_z * source_p
        rhs_m[self.gm.wall_row] = wall_data_m
        rhs_p[self.gp.wall_row] = wall_data_p
        rhs_m[self.gm.interface_row] = value_jump
        rhs_p[self.gp.interface_row] = flux_jump
        if self.gauge:
            row = rhs_m[self.gm.wall_row]
            rhs_m[self.gm.wall_row] = row - row.mean()
        _strip_nyquist(rhs_m)
        _strip_nyquist(rhs_p)
        b = np.concatenate([rhs_m.ravel(), rhs_p.ravel()])
        x = _run_gmres(self._matvec, self._precond, b, rtol, x0,
                       "transmission solve")
        half = nz * nx
        wm = x[:half].reshape(nz, nx)
        wp = x[half:].reshape(nz, nx)
        return wm, wp, x


def harmonic_extension_solve(geom: PhaseGeometry, gvalues, rtol=1e-12):
    """Curved-domain harmonic extension with zero Dirichlet wall data."""
    solver = SideSolver(geom, DIRICHLET, DIRICHLET)
    values, _ = solver.solve(0.0, np.asarray(gvalues, float), 0.0, rtol=rtol)
    return values


@dataclass
class BoundaryData:
    kind: str
    data: object = 0.0


@dataclass
class EllipticProblem:
    """One-phase problem Delta_y v = source with boundary data per face."""

    side: int
    source: object = 0.0
    interface: BoundaryData = None
    wall: BoundaryData = None
    gauge: bool = False

    def __post_init__(self):
        if self.interface is None:
            self.interface = BoundaryData(DIRICHLET, 0.0)
        if self.wall is None:
            self.wall = BoundaryData(DIRICHLET, 0.0)


def solve_laplace(problem: EllipticProblem, interface: InterfaceState,
                  nz: int = 33, geom: PhaseGeometry = None,
                  rtol: float = 1e-12) -> StripField:
    """Solve the mapped Laplace problem; boundary data interpolated exactly at
    the collocation lines, interior residual driven below the tolerance."""
    if geom is None:
        geom = PhaseGeometry(interface, problem.side, nz)
    solver = SideSolver(geom, problem.interface.kind, problem.wall.kind,
                        gauge=problem.gauge)
    values, _ = solver.solve(problem.source, _as_row(problem.interface.data, geom),
                             _as_row(problem.wall.data, geom), rtol=rtol)
    return StripField(geom, values)


def _as_row(data, geom):
    if np.ndim(data) == 0:
        return np.full(geom.grid.nx, float(data))
    return np.asarray(data, float)


def residual_norm(geom: PhaseGeometry, w, source) -> float:
    """Interior residual of the mapped equation Delta_y v = source."""
    res = _side_residual(geom, w, DIRICHLET, DIRICHLET)
    target = geom.phi_z * (np.zeros_like(w) + source)
    diff = (res - target)[1:-1]
    return float(np.sqrt(np.mean(diff**2)))


# ---------------------------------------------------------------------------
# div-curl recovery (d = 1: 2D flow in the (x1, x3) plane)
# ---------------------------------------------------------------------------


@dataclass
class DivCurlResult:
    u1: StripField
    u3: StripField
    psi: np.ndarray
    potential: np.ndarray
    beta: float


def _perp_velocity(geom, psi):
    """u = grad^perp psi = (-d3 psi, d1 psi), physical derivatives."""
    px, pz = geom.grad_phys(psi)
    return -pz, px


def divcurl_solve(geom: PhaseGeometry, omega, sigma, theta, alpha,
                  rtol=1e-12, check_tol=1e-8) -> DivCurlResult:
    """Solve curl u = omega, div u = sigma, u.N = theta on the interface,
    u.n = 0 on the wall, with prescribed wall-mean horizontal velocity alpha.

    Realized as a potential/stream split u = grad(phi) + grad^perp(psi) plus a
    harmonic stream field carrying the wall circulation.
    """
    grid = geom.grid
    omega = np.zeros((grid.nz, grid.nx)) + omega
    sigma = np.zeros((grid.nz, grid.nx)) + sigma
    theta = np.zeros(grid.nx) + theta
    vol_int = geom.integrate_phys(sigma)
    flux_int = float(np.mean(theta))
    scale = max(np.abs(sigma).max(), np.abs(theta).max(), 1.0)
    if abs(vol_int - flux_int) > check_tol * scale:
        raise IncompatibleDataError(
            f"div-curl data violates solvability: int sigma = {vol_int:.3e} "
            f"vs int theta = {flux_int:.3e}"
        )
    pot_solver = SideSolver(geom, CONORMAL, NEUMANN, gauge=True)
    pot, _ = pot_solver.solve(sigma, theta, 0.0, rtol=rtol)
    psi_solver = SideSolver(geom, DIRICHLET, DIRICHLET)
    psi, _ = psi_solver.solve(omega, 0.0, 0.0, rtol=rtol)
    psi_h = geom.harmonic_extension_values(np.ones(grid.nx), rtol=rtol)
    pot_u1, pot_u3 = geom.grad_phys(pot)
    rot_u1, rot_u3 = _perp_velocity(geom, psi)
    u1 = pot_u1 + rot_u1
    u3 = pot_u3 + rot_u3
    u1_h, u3_h = _perp_velocity(geom, psi_h)
    wall = geom.wall_row
    mean_h = float(np.mean(u1_h[wall]))
    if abs(mean_h) < 1e-14:
        raise SolverError("harmonic circulation field degenerate")
    beta = (float(alpha) - float(np.mean(u1[wall]))) / mean_h
    return DivCurlResult(
        u1=StripField(geom, u1 + beta * u1_h),
        u3=StripField(geom, u3 + beta * u3_h),
        psi=psi + beta * psi_h,
        potential=pot,
        beta=beta,
    )


def velocity_recovery_tangential(geom: PhaseGeometry, omega, divu, dtf, alpha,
                                 rtol=1e-12, max_iter=40) -> DivCurlResult:
    """Velocity recovery with the interface condition in kinematic form.

    u.N = dt_f with dt_f = D_t f - u1 d1 f is the linear trace condition
    u3 = D_t f; imposed by iterating the normal datum of divcurl_solve,
    converging at rate max |d1 f|.
    """
    dtf = np.zeros(geom.grid.nx) + dtf
    theta = dtf.copy()
    result = None
    for _ in range(max_iter):
        result = divcurl_solve(geom, omega, divu, theta, alpha, rtol=rtol)
        theta_new = dtf - result.u1.trace_interface() * geom.fx
        delta = np.abs(theta_new - theta).max()
        theta = theta_new
        if delta <= max(1e-13, rtol) * max(1.0, np.abs(dtf).max()):
            break
    return divcurl_solve(geom, omega, divu, theta, alpha, rtol=rtol)


# ---------------------------------------------------------------------------
# pressure solvers
# ---------------------------------------------------------------------------


def velocity_gradient_trace_source(geom, u1, u3):
    """tr (grad u)^2 = sum_JK dJ uK dK uJ for a 2D velocity field."""
    u1x, u1z = geom.grad_phys(u1)
    u3x, u3z = geom.grad_phys(u3)
    return u1x**2 + 2.0 * u1z * u3x + u3z**2


def pressure_incompressible(geom_m: PhaseGeometry, geom_p: PhaseGeometry,
                            u_m, u_p, rho_m, rho_p, g=0.0, rtol=1e-12,
                            div_tol=1e-6):
    """Per-side pressure problems: -Delta p = rho tr(grad u)^2, p = 0 on the
    interface, wall Neumann data d3 p = -rho g."""
    out = []
    for geom, (u1, u3), rho in ((geom_m, u_m, rho_m), (geom_p, u_p, rho_p)):
        div = geom.dx_phys(u1) + geom.dz_phys(u3)
        if np.abs(div).max() > div_tol:
            raise IncompatibleDataError(
                f"velocity not divergence-free: max |div u| = "
                f"{np.abs(div).max():.3e}"
            )
        source = -rho * velocity_gradient_trace_source(geom, u1, u3)
        solver = SideSolver(geom, DIRICHLET, NEUMANN)
        values, _ = solver.solve(source, 0.0, -rho * g, rtol=rtol)
        out.append(StripField(geom, values))
    return tuple(out)


def pressure_transmission(geom_m, geom_p, u_m, u_p, rho_m, rho_p, g=0.0,
                          flux_jump=0.0, rtol=1e-11, x0=None):
    """Two-phase projection pressure: div((1/rho) grad p) = -tr(grad u)^2 with
    [p] = 0, [(1/rho) N.grad p] = flux_jump, wall data d3 p = -rho g.

    Gauged so the interface trace of the minus side has zero mean (q = 0)."""
    solver = TransmissionSolver(geom_m, geom_p, 1.0 / rho_m, 1.0 / rho_p,
                                wall_kind=NEUMANN, gauge=True)
    src_m = -velocity_gradient_trace_source(geom_m, u_m[0], u_m[1])
    src_p = -velocity_gradient_trace_source(geom_p, u_p[0], u_p[1])
    wm, wp, x = solver.solve(src_m, src_p, value_jump=0.0, flux_jump=flux_jump,
                             wall_data_m=-rho_m * g, wall_data_p=-rho_p * g,
                             rtol=rtol, x0=x0)
    return StripField(geom_m, wm), StripField(geom_p, wp), x


def laplacian_phys(geom, values):
    """Physical Laplacian evaluated through the mapped divergence form."""
    grid = geom.grid
    b11, b12, b22 = geom.coeff_B()
    wx = grid.ddx(values)
    wz = grid.ddz(values)
    q1 = b11 * wx + b12 * wz
    q2 = b12 * wx + b22 * wz
    return (grid.ddx(q1) + grid.ddz(q2)) / geom.phi_z


def compressible_pressure_consistency(state, interface: InterfaceState) -> dict:
    """Residual report of the elliptic form of the pressure wave equation:

        Delta p = (rho / gamma p) D_t^2 p - rho tr(grad u)^2 + M_p,
        M_p = -(rho / (gamma p^2)) (D_t p)^2 + (1/rho) grad rho . grad p,

    with p = q(t) on the interface and d3 p = 0 on the walls.  D_t p and
    D_t^2 p must be supplied with the state.
    """
    for name in ("p", "u1", "u3", "S", "Dtp", "Dt2p"):
        for side in ("minus", "plus"):
            if getattr(state, side).get(name) is None:
                raise IncompleteStateError(
                    f"state missing field {name!r} on side {side}"
                )
    report = {}
    q_values = []
    for side in ("minus", "plus"):
        fields = getattr(state, side)
        geom = fields["geom"]
        p, u1, u3 = fields["p"], fields["u1"], fields["u3"]
        S, dtp, dt2p = fields["S"], fields["Dtp"], fields["Dt2p"]
        rho = state.eos_density(p, S)
        lap = laplacian_phys(geom, p)
        tr = velocity_gradient_trace_source(geom, u1, u3)
        rx, rz = geom.grad_phys(rho)
        px, pz = geom.grad_phys(p)
        m_p = -(rho / (state.gamma * p**2)) * dtp**2 + (rx * px + rz * pz) / rho
        interior = lap - (rho / (state.gamma * p)) * dt2p + rho * tr - m_p
        report[f"interior_{side}"] = float(np.sqrt(np.mean(interior[1:-1] ** 2)))
        ptrace = p[geom.interface_row]
        q_values.append(float(np.mean(ptrace)))
        report[f"interface_{side}"] = float(
            np.sqrt(np.mean((ptrace - np.mean(ptrace)) ** 2))
        )
        report[f"wall_{side}"] = float(
            np.sqrt(np.mean(geom.dz_phys(p)[geom.wall_row] ** 2))
        )
    report["q"] = 0.5 * (q_values[0] + q_values[1])
    report["interface_gauge_jump"] = abs(q_values[0] - q_values[1])
    return report
