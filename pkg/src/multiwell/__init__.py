"""Geodesic distances between moving potential wells, optimal transition
profiles, diffuse-interface energy minimization, and the matching
sharp-interface limit functional, on 1D and 2D box domains."""

__version__ = "0.1.0"

from .potential import (  # noqa: F401
    Box,
    MaxwellParameters,
    MultiWellPotential,
    WellMap,
    builtin,
    from_descriptor,
    maxwell_parameters,
    validate_assumptions,
)
