"""Desk-scale laboratory for Boolean-function complexity and composed communication problems."""

from bfclab.boolfn import (
    MultilinearPoly,
    RealTable,
    Spectrum,
    TruthTable,
    anf,
    builtin,
    fourier,
    parse_hex,
    shift,
    substitute,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "MultilinearPoly",
    "RealTable",
    "Spectrum",
    "TruthTable",
    "anf",
    "builtin",
    "fourier",
    "parse_hex",
    "shift",
    "substitute",
    "symmetrize",
]
