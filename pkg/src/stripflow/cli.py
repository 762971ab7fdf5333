"""Command-line runner: configuration, scenario orchestration, data emission.

    stripflow <scenario> --config config.json [--out dir] [--seed n]

Scenarios: simulate, dispersion, dn-test, energy, check-state, budget.
Outputs: record.jsonl (one record per line, floats serialized with 17
significant digits for lossless round-trip), manifest.json (config echo,
version, grid), and state snapshots in the sidecar format.

Exit codes: 0 clean, 2 usage/config error, 3 validation failure,
4 hyperbolicity loss, 5 CFL violation, 6 bijectivity loss, 7 solver failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dn import dn_apply, dn_flat_symbol
from .dynamics import (
    FlatBackground,
    ReferenceIntegrator,
    SimState,
    initial_wave_state,
    interface_energy_budget,
    linear_dispersion,
    mode_amplitude,
    stability_classify,
)
from .errors import (
    BijectivityError,
    HyperbolicityLossError,
    SimulationError,
    SolverError,
    StepSizeError,
    StripflowError,
)
from .geometry import InterfaceState, SIDE_MINUS
from .snapshots import read_snapshot, write_snapshot
from .states import (
    check_compatibility,
    classify_discontinuity,
    energy_norm,
    tangential_pressure_check,
    taylor_sign,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_HYPERBOLICITY = 4
EXIT_CFL = 5
EXIT_BIJECTIVITY = 6
EXIT_SOLVER = 7


def _format_value(value):
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite value in record")
        return format(value, ".17g")
    if isinstance(value, (np.floating,)):
        return _format_value(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return (
            "{"
            + ",".join(f"{json.dumps(str(k))}:{_format_value(v)}" for k, v in items)
            + "}"
        )
    raise TypeError(f"cannot serialize {type(value)}")


def write_records(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(_format_value(rec) + "\n")


class ConfigError(StripflowError):
    pass


DEFAULT_TOLERANCES = {
    "solver_rtol": 1e-10,
    "cfl": 0.5,
    "zero_jump": 1e-6,
    "nonzero_jump": 1e-2,
    "tangential": 1e-6,
    "dn_test": 1e-6,
}


class RunConfig:
    """Validated run configuration (see schema/runconfig.schema.json)."""

    SCENARIOS = ("simulate", "dispersion", "dn-test", "energy", "check-state",
                 "budget")

    def __init__(self, raw: dict):
        self.raw = raw
        self.scenario = raw.get("scenario")
        if self.scenario not in self.SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        grid = raw.get("grid", {})
        self.nx = int(grid.get("nx", 64))
        self.nz = int(grid.get("nz", 33))
        self.d = int(grid.get("d", 1))
        if self.nx < 2 or self.nx & (self.nx - 1):
            raise ConfigError("grid.nx must be a power of two")
        if self.d != 1:
            raise ConfigError("the runner drives d = 1 scenarios")
        consts = raw.get("constants", {})
        self.rho_minus = float(consts.get("rho_minus", 1.0))
        self.rho_plus = float(consts.get("rho_plus", 1.0))
        self.g = float(consts.get("g", 0.0))
        self.A = float(consts.get("A", 1.0))
        self.gamma = float(consts.get("gamma", 1.4))
        iface = raw.get("interface", {})
        self.f_star = float(iface.get("f_star", 0.0))
        self.height = float(iface.get("height", self.f_star))
        self.modes = [
            (float(m["amplitude"]), int(m["wavenumber"]), float(m.get("phase", 0.0)))
            for m in iface.get("modes", [])
        ]
        self.wave_kind = iface.get("kind", "standing")
        time_cfg = raw.get("time", {})
        self.dt = float(time_cfg.get("dt", 0.02))
        self.t_end = float(time_cfg.get("t_end", 1.0))
        self.stride = int(time_cfg.get("stride", 1))
        if self.dt <= 0 or self.t_end <= 0 or self.stride < 1:
            raise ConfigError("time parameters must be positive")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(raw.get("tolerances", {}))
        if any(v <= 0 for v in tol.values()):
            raise ConfigError("tolerances must be positive")
        self.tolerances = tol
        self.kappa = int(raw.get("kappa", 4))
        self.kmax = int(raw.get("kmax", 16))
        self.snapshot = raw.get("snapshot")
        self.snapshots = bool(raw.get("snapshots", False))
        self.outdir = raw.get("output", {}).get("directory", "out")
        self.seed = int(raw.get("seed", 0))

    @classmethod
    def from_file(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable config {path}: {exc}")
        return cls(raw)

    def background(self):
        return FlatBackground(rho_minus=self.rho_minus, rho_plus=self.rho_plus,
                              g=self.g, c=self.height)

    def manifest(self, outdir):
        return {
            "config": self.raw,
            "version": __version__,
            "grid": {"d": self.d, "nx": self.nx, "nz": self.nz},
            "scenario": self.scenario,
            "seed": self.seed,
            "output_directory": str(outdir),
        }


def _emit_manifest(cfg, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(
        json.dumps(cfg.manifest(outdir), indent=2, sort_keys=True)
    )
    return outdir


def run_dispersion(cfg, outdir):
    bg = cfg.background()
    records = []
    print(f"{'k':>4} {'omega2_exact':>16} {'omega2_principal':>18} "
          f"{'growth_rate':>14}")
    for k in range(1, cfg.kmax + 1):
        row = linear_dispersion(bg, k)
        records.append(row)
        print(f"{k:>4} {row['omega2_exact']:>16.8f} "
              f"{row['omega2_principal']:>18.8f} {row['growth_rate']:>14.8f}")
    write_records(outdir / "record.jsonl", records)
    return EXIT_OK


def run_dn_test(cfg, outdir):
    nx, nz = cfg.nx, cfg.nz
    x = 2.0 * np.pi * np.arange(nx) / nx
    interface = InterfaceState(
        f=np.full(nx, cfg.height), ft=np.zeros(nx), f_star=cfg.height
    )
    from .geometry import PhaseGeometry

    geom = PhaseGeometry(interface, SIDE_MINUS, nz)
    records = []
    worst = 0.0
    for k in range(cfg.kmax + 1):
        g = np.cos(k * x) if k else np.ones(nx)
        out = dn_apply(g, interface, SIDE_MINUS, geom=geom,
                       rtol=cfg.tolerances["solver_rtol"])
        exact = dn_flat_symbol(k, cfg.height, SIDE_MINUS) * g
        rel = float(np.abs(out.values - exact).max() / np.abs(exact).max())
        worst = max(worst, rel)
        records.append({"k": k, "relative_error": rel,
                        "symbol": dn_flat_symbol(k, cfg.height, SIDE_MINUS)})
    records.append({"max_relative_error": worst})
    write_records(outdir / "record.jsonl", records)
    print(f"dn-test: max relative error {worst:.3e} over |k| <= {cfg.kmax}")
    if worst > cfg.tolerances["dn_test"]:
        print("dn-test FAILED", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def run_check_state(cfg, outdir):
    if not cfg.snapshot:
        raise ConfigError("check-state requires a 'snapshot' path")
    state, interface, _ = read_snapshot(cfg.snapshot)
    report = {}
    cls = classify_discontinuity(
        state, interface, zero_tol=cfg.tolerances["zero_jump"],
        nonzero_tol=cfg.tolerances["nonzero_jump"],
    )
    report["classification"] = cls.label
    report["jumps"] = cls.jumps
    report["m_N"] = cls.m_N
    tang = tangential_pressure_check(state, interface,
                                     tol=cfg.tolerances["tangential"])
    report["tangential"] = {
        "max": tang["max_tangential"], "q": tang["q"],
        "kh_degenerate": tang["kh_degenerate"],
    }
    order = 2 if state.compressible else 1
    report["compatibility"] = check_compatibility(state, interface, order=order)
    ts = taylor_sign(state, interface)
    report["taylor_sign_min"] = ts.min
    report["taylor_formula_gap"] = ts.formula_gap
    write_records(outdir / "record.jsonl", [report])
    print(f"classification: {cls.label}; tangential residual "
          f"{tang['max_tangential']:.3e}; min Taylor sign {ts.min:.3e}")
    return EXIT_OK


def run_energy(cfg, outdir):
    if not cfg.snapshot:
        raise ConfigError("energy requires a 'snapshot' path")
    state, interface, _ = read_snapshot(cfg.snapshot)
    report = energy_norm(state, interface, kappa=cfg.kappa)
    lower = energy_norm(state, interface, kappa=cfg.kappa, lower_order=True)
    record = {
        "kappa": report.kappa,
        "truncation": report.truncation,
        "interface": report.interface,
        "domain": report.domain,
        "lower_order": lower.domain,
        "total": report.total(),
    }
    write_records(outdir / "record.jsonl", [record])
    print(f"energy total {report.total():.6e} (kappa={cfg.kappa}, "
          f"truncation l <= {report.truncation})")
    return EXIT_OK


def _sim_record(cfg, integ, state, diags, budget=None):
    inc_state = diags.incompressible_state(integ.rho_m, integ.rho_p, integ.g)
    interface = diags.interface
    energies = energy_norm(inc_state, interface, kappa=cfg.kappa)
    stab = stability_classify(diags, integ,
                              tangential_tol=cfg.tolerances["tangential"])
    record = {
        "time": state.time,
        "step": state.step,
        "energy": energies.entries(),
        "min_a": float(diags.a_field.min()),
        "mode_amplitudes": [
            [k, mode_amplitude(state.f, k)]
            for k in range(1, min(cfg.kmax, cfg.nx // 2))
        ],
        "classification": stab.label,
        "tangential_residual": stab.tangential_residual,
        "kinetic_energy": integ.kinetic_energy(diags),
        "lower_area": integ.lower_area(state),
        "slip_max": float(np.abs(state.slip).max()),
    }
    if budget is not None:
        record["budget"] = dict(budget.terms)
        record["budget"]["closure_defect"] = budget.closure_defect
        record["budget"]["relative_defect"] = budget.relative_defect
    return record


def run_simulate(cfg, outdir, with_budget=False):
    bg = cfg.background()
    integ = ReferenceIntegrator(
        rho_minus=cfg.rho_minus, rho_plus=cfg.rho_plus, g=cfg.g, nx=cfg.nx,
        nz=cfg.nz, f_star=cfg.f_star, cfl=cfg.tolerances["cfl"],
        rtol=cfg.tolerances["solver_rtol"],
    )
    state = None
    for amp, k, phase in cfg.modes:
        piece = initial_wave_state(bg, cfg.nx, cfg.nz, k=k, amplitude=amp,
                                   kind=cfg.wave_kind, phase=phase)
        if state is None:
            state = piece
        else:
            state.f = state.f + (piece.f - bg.c)
            state.slip = state.slip + piece.slip
    if state is None:
        state = initial_wave_state(bg, cfg.nx, cfg.nz, k=0, amplitude=0.0)
    nsteps = int(round(cfg.t_end / cfg.dt))
    records = []
    prev = None
    try:
        diags = integ.diagnose(state)
        records.append(_sim_record(cfg, integ, state, diags))
        for istep in range(nsteps):
            new = integ.step(state, cfg.dt)
            if (istep + 1) % cfg.stride == 0 or istep == nsteps - 1:
                diags = integ.diagnose(new)
                budget = None
                if with_budget and prev is not None:
                    nxt = integ.step(new, cfg.dt)
                    budget = interface_energy_budget(
                        integ, (state, new, nxt), cfg.dt, kappa=cfg.kappa
                    )
                records.append(_sim_record(cfg, integ, new, diags, budget))
                if cfg.snapshots:
                    snapdir = outdir / f"snapshot_{new.step:06d}"
                    write_snapshot(
                        snapdir,
                        diags.incompressible_state(integ.rho_m, integ.rho_p,
                                                   integ.g),
                        diags.interface, kappa=cfg.kappa,
                    )
            prev = state
            state = new
    except HyperbolicityLossError as exc:
        write_records(outdir / "record.jsonl", records)
        print(f"hyperbolicity loss: {exc}", file=sys.stderr)
        return EXIT_HYPERBOLICITY
    except StepSizeError as exc:
        write_records(outdir / "record.jsonl", records)
        print(f"CFL violation: {exc}", file=sys.stderr)
        return EXIT_CFL
    except (BijectivityError, SimulationError) as exc:
        write_records(outdir / "record.jsonl", records)
        print(f"simulation terminated: {exc}", file=sys.stderr)
        return EXIT_BIJECTIVITY
    write_records(outdir / "record.jsonl", records)
    final = records[-1]
    print(f"simulate: {state.step} steps to t = {state.time:.4f}; "
          f"min a = {final['min_a']:.4e}; classification "
          f"{final['classification']}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stripflow",
        description="two-phase interface dynamics laboratory",
    )
    parser.add_argument("scenario", choices=RunConfig.SCENARIOS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = RunConfig.from_file(args.config)
        if args.scenario != cfg.scenario:
            cfg.scenario = args.scenario
            cfg.raw["scenario"] = args.scenario
        if args.out:
            cfg.outdir = args.out
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.raw["seed"] = args.seed
        np.random.seed(cfg.seed % (2**32))
        outdir = _emit_manifest(cfg, cfg.outdir)
        if cfg.scenario == "dispersion":
            return run_dispersion(cfg, outdir)
        if cfg.scenario == "dn-test":
            return run_dn_test(cfg, outdir)
        if cfg.scenario == "check-state":
            return run_check_state(cfg, outdir)
        if cfg.scenario == "energy":
            return run_energy(cfg, outdir)
        if cfg.scenario == "simulate":
            return run_simulate(cfg, outdir)
        if cfg.scenario == "budget":
            return run_simulate(cfg, outdir, with_budget=True)
        raise ConfigError(f"unhandled scenario {cfg.scenario}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HyperbolicityLossError as exc:
        print(f"hyperbolicity loss: {exc}", file=sys.stderr)
        return EXIT_HYPERBOLICITY
    except StepSizeError as exc:
        print(f"CFL violation: {exc}", file=sys.stderr)
        return EXIT_CFL
    except BijectivityError as exc:
        print(f"bijectivity loss: {exc}", file=sys.stderr)
        return EXIT_BIJECTIVITY
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except StripflowError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
