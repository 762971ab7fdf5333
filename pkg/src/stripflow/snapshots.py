"""State snapshot format: one JSON manifest plus raw float64 sidecar files.

The manifest records grid sizes, physical constants, side metadata and kappa;
each field is stored in a sidecar as little-endian 64-bit floats, row-major
(z-index outer, x-index inner).
"""

import json
from pathlib import Path

import numpy as np

from .geometry import InterfaceState, PhaseGeometry, SIDE_MINUS, SIDE_PLUS
from .states import CompressibleState, IncompressibleState, PhaseFields

_MANIFEST = "manifest.json"


def _write_array(path: Path, values):
    arr = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    arr.tofile(path)


def _read_array(path: Path, shape):
    arr = np.fromfile(path, dtype="<f8")
    return arr.reshape(shape)


def write_snapshot(directory, state, interface: InterfaceState, kappa: int = 4,
                   extra: dict = None, manifest_name: str = _MANIFEST) -> Path:
    """Write a two-phase state snapshot; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nz = state.minus.geom.grid.nz
    manifest = {
        "format": "stripflow-snapshot-1",
        "kind": "compressible" if state.compressible else "incompressible",
        "grid": {"d": interface.d, "nx": interface.nx, "nz": nz},
        "kappa": kappa,
        "constants": (
            {"A": state.A, "gamma": state.gamma, "g": state.g}
            if state.compressible
            else {
                "rho_minus": state.rho_minus,
                "rho_plus": state.rho_plus,
                "g": state.g,
            }
        ),
        "interface": {
            "f": "interface_f.f64",
            "ft": "interface_ft.f64",
            "f_star": interface.f_star,
        },
        "sides": {},
        "byte_order": "little",
        "dtype": "float64",
        "layout": "row-major (z outer, x inner)",
    }
    _write_array(directory / "interface_f.f64", interface.f)
    _write_array(directory / "interface_ft.f64", interface.ft)
    for name in ("minus", "plus"):
        ph = getattr(state, name)
        fields = {}
        for fname in ("u1", "u3", "p", "S", "Dtp", "Dt2p"):
            values = ph.get(fname)
            if values is None:
                continue
            fn = f"{name}_{fname}.f64"
            _write_array(directory / fn, values)
            fields[fname] = fn
        manifest["sides"][name] = {"shape": [nz, interface.nx], "fields": fields}
    if extra:
        manifest["extra"] = extra
    path = directory / manifest_name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def read_snapshot(directory, manifest_name: str = _MANIFEST):
    """Load a snapshot; returns (state, interface, manifest)."""
    directory = Path(directory)
    manifest = json.loads((directory / manifest_name).read_text())
    nx = manifest["grid"]["nx"]
    nz = manifest["grid"]["nz"]
    f = _read_array(directory / manifest["interface"]["f"], (nx,))
    ft = _read_array(directory / manifest["interface"]["ft"], (nx,))
    interface = InterfaceState(f=f, ft=ft,
                               f_star=manifest["interface"]["f_star"])
    phases = {}
    for name, side in (("minus", SIDE_MINUS), ("plus", SIDE_PLUS)):
        info = manifest["sides"][name]
        geom = PhaseGeometry(interface, side, nz)
        arrays = {
            fname: _read_array(directory / fn, tuple(info["shape"]))
            for fname, fn in info["fields"].items()
        }
        phases[name] = PhaseFields(geom=geom, **arrays)
    constants = manifest["constants"]
    if manifest["kind"] == "compressible":
        state = CompressibleState(minus=phases["minus"], plus=phases["plus"],
                                  A=constants["A"], gamma=constants["gamma"],
                                  g=constants.get("g", 0.0))
    else:
        state = IncompressibleState(
            minus=phases["minus"], plus=phases["plus"],
            rho_minus=constants["rho_minus"], rho_plus=constants["rho_plus"],
            g=constants.get("g", 0.0),
        )
    return state, interface, manifest
