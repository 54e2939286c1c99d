"""Uniform grids standing in for the continuous labels q and t.

Continuum kets |t> are represented as grid deltas scaled by 1/sqrt(step), so
that they are orthonormal under the step-weighted inner product

    <a|b> = sum_k conj(a_k) b_k * step.

The same convention is used for the spatial grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import constants

from .errors import ConfigurationError, GridMismatchError

HBAR = constants.hbar
MIN_POINTS = 8
NORM_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform 1-D grid with ``n`` samples on ``[lo, hi]``.

    Periodic grids exclude ``hi`` (``step = (hi - lo)/n``) and are the ones
    that admit spectral derivatives; non-periodic grids include both ends.
    """

    n: int
    lo: float
    hi: float
    periodic: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ConfigurationError(f"grid needs n >= {MIN_POINTS} samples, got {self.n}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ConfigurationError(f"grid needs hi > lo, got lo={self.lo}, hi={self.hi}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def step(self) -> float:
        if self.periodic:
            return self.length / self.n
        return self.length / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.lo + np.arange(self.n) * self.step
        pts.setflags(write=False)
        return pts

    def index_of(self, value: float) -> int:
        """Index of the sample nearest to ``value``.

        Raises if ``value`` lies outside ``[lo, hi]``.
        """
        if not (self.lo <= value <= self.hi):
            raise ConfigurationError(
                f"point {value!r} lies outside the grid interval [{self.lo}, {self.hi}]"
            )
        k = int(np.rint((value - self.lo) / self.step))
        if self.periodic:
            return k % self.n
        return min(max(k, 0), self.n - 1)


def make_grid(lo: float, hi: float, n: int, periodic: bool = True) -> GridSpec:
    return GridSpec(n=n, lo=lo, hi=hi, periodic=periodic)


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes sampled on a grid."""

    grid: GridSpec
    amp: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        if amp.shape != (self.grid.n,):
            raise ConfigurationError(
                f"amplitude array has shape {amp.shape}, grid expects ({self.grid.n},)"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2) * self.grid.step)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm2))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm2 - 1.0) <= NORM_TOL

    def normalized(self) -> StateVector:
        nrm = self.norm
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ConfigurationError("cannot normalize a zero or non-finite state")
        return StateVector(self.grid, self.amp / nrm)

    def __add__(self, other: StateVector) -> StateVector:
        _check_same_grid(self.grid, other.grid)
        return StateVector(self.grid, self.amp + other.amp)

    def __sub__(self, other: StateVector) -> StateVector:
        _check_same_grid(self.grid, other.grid)
        return StateVector(self.grid, self.amp - other.amp)

    def __mul__(self, scalar: complex) -> StateVector:
        return StateVector(self.grid, self.amp * scalar)

    __rmul__ = __mul__


def state_from_function(grid: GridSpec, func, normalize: bool = True) -> StateVector:
    """Sample ``func`` on the grid points."""
    state = StateVector(grid, func(grid.points))
    return state.normalized() if normalize else state


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Step-weighted inner product, antilinear in ``a``."""
    _check_same_grid(a.grid, b.grid)
    return complex(np.vdot(a.amp, b.amp) * a.grid.step)


def time_eigenstate(grid: GridSpec, t0: float) -> StateVector:
    """Discrete |t0>: a delta at the sample nearest ``t0``, height 1/sqrt(step)."""
    amp = np.zeros(grid.n, dtype=complex)
    amp[grid.index_of(t0)] = 1.0 / np.sqrt(grid.step)
    return StateVector(grid, amp)


def temporal_superposition(
    grid: GridSpec, cA: complex, tA: float, cB: complex, tB: float
) -> StateVector:
    """Normalized ``cA|tA> + cB|tB>``.

    A vanishing coefficient is allowed and yields the pure single-moment ket.
    Both moments must snap to distinct samples.
    """
    ia, ib = grid.index_of(tA), grid.index_of(tB)
    if ia == ib:
        raise ConfigurationError(
            f"moments {tA!r} and {tB!r} snap to the same grid index {ia}; "
            "refine the grid or separate the moments"
        )
    weight = abs(cA) ** 2 + abs(cB) ** 2
    if weight == 0.0:
        raise ConfigurationError("superposition needs |cA|^2 + |cB|^2 > 0")
    amp = np.zeros(grid.n, dtype=complex)
    scale = 1.0 / np.sqrt(weight * grid.step)
    amp[ia] = cA * scale
    amp[ib] = cB * scale
    return StateVector(grid, amp)


@dataclass(frozen=True, eq=False)
class SpaceTimeState:
    """Amplitude psi(q, t) on the product grid, rows indexed by q."""

    grid_q: GridSpec
    grid_t: GridSpec
    amp: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        if amp.shape != (self.grid_q.n, self.grid_t.n):
            raise ConfigurationError(
                f"amplitude matrix has shape {amp.shape}, "
                f"grids expect ({self.grid_q.n}, {self.grid_t.n})"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2) * self.grid_q.step * self.grid_t.step))

    def slice_at(self, k: int) -> StateVector:
        """The spatial wavefunction at time sample ``k``."""
        return StateVector(self.grid_q, self.amp[:, k])

    def slice_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.amp) ** 2, axis=0) * self.grid_q.step)


def product_state(f: StateVector, g: StateVector) -> SpaceTimeState:
    """``f (x) g`` with ``f`` on the q grid and ``g`` on the t grid."""
    return SpaceTimeState(f.grid, g.grid, np.outer(f.amp, g.amp))
