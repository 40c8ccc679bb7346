"""Numerical operators: spectral transforms and the real-space singular integral."""

from src.operators.spectral import (
    dispersion_apply,
    dispersion_symbol,
    interpolate,
    sobolev_norm,
    spectral_derivative,
    sup_norm,
)

__all__ = [
    "dispersion_apply",
    "dispersion_symbol",
    "interpolate",
    "sobolev_norm",
    "spectral_derivative",
    "sup_norm",
]
