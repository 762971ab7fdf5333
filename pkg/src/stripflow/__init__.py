"""stripflow: spectral laboratory for sharp density interfaces of two-phase
incompressible/compressible Euler flow in a periodic strip."""

__version__ = "0.1.0"

from .fields import PeriodicField
from .geometry import (
    InterfaceState,
    PhaseGeometry,
    SIDE_MINUS,
    SIDE_PLUS,
    StripField,
    frame,
    harmonic_coordinates,
    harmonic_extension,
    tangential_derivative,
)
from .spectral import (
    CutoffFamily,
    SymbolSampler,
    bony_decompose,
    lowpass,
    lp_block,
    paradiff_apply,
    paraproduct,
    sobolev_norm,
)
from .dn import LambdaSymbol, dn_apply, dn_flat_symbol, paralinearization_remainder

__all__ = [
    "PeriodicField",
    "InterfaceState",
    "PhaseGeometry",
    "SIDE_MINUS",
    "SIDE_PLUS",
    "StripField",
    "frame",
    "harmonic_coordinates",
    "harmonic_extension",
    "tangential_derivative",
    "CutoffFamily",
    "SymbolSampler",
    "bony_decompose",
    "lowpass",
    "lp_block",
    "paradiff_apply",
    "paraproduct",
    "sobolev_norm",
    "LambdaSymbol",
    "dn_apply",
    "dn_flat_symbol",
    "paralinearization_remainder",
    "__version__",
]
