"""Numerical laboratory for the operator of time and temporal double-slit interference."""

__version__ = "0.1.0"

from .errors import ChronoslitError, ConfigurationError, GridMismatchError, InsufficientDataError
from .grids import (
    HBAR,
    GridSpec,
    SpaceTimeState,
    StateVector,
    inner_product,
    make_grid,
    temporal_superposition,
    time_eigenstate,
)
