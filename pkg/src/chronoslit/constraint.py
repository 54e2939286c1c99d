"""Hamiltonians on the q grid and solutions of ``s psi = H psi`` on q x t.

Solutions of the constraint are built by unitary Crank-Nicolson stepping
from an initial spatial slice; ``constraint_residual`` then certifies the
result independently by applying ``i hbar d/dt`` and ``H`` to the whole
space-time array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.signal import windows

from .algebra import (
    LinearOperator,
    _hermitize,
    apply_q,
    apply_t,
    energy_levels,
    energy_operator,
    fourier_multiplier,
    wavenumbers,
)
from .errors import ConfigurationError, GridMismatchError
from .grids import HBAR, GridSpec, SpaceTimeState, StateVector

MIN_EIGENVALUE = -1e-9
GROUND_STATE_EDGE_TOL = 1e-12
KAISER_BETA = 20.0


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """A time-independent Hamiltonian on a periodic spatial grid."""

    grid_q: GridSpec
    kind: str
    mat: LinearOperator
    mass: float
    omega: float = 0.0
    hbar: float = HBAR

    def __post_init__(self):
        if not self.mat.hermitian_hint:
            raise ConfigurationError("Hamiltonian matrix must be flagged hermitian")
        lowest = float(self.eigenvalues[0])
        if lowest < MIN_EIGENVALUE:
            raise ConfigurationError(f"Hamiltonian spectrum not bounded by 0: lowest {lowest:.3e}")

    @cached_property
    def _eigh(self):
        return np.linalg.eigh(self.mat.mat)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigh[0]

    def eigenstate(self, level: int) -> StateVector:
        """Normalized eigenvector ``level`` (0 = ground); its largest entry is real positive."""
        vec = self._eigh[1][:, level]
        vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
        return StateVector(self.grid_q, vec).normalized()

    def apply(self, state: StateVector) -> StateVector:
        return self.mat.apply(state)


def _kinetic(grid_q: GridSpec, mass: float, hbar: float) -> np.ndarray:
    kappa = wavenumbers(grid_q)
    return _hermitize(fourier_multiplier(grid_q, (hbar * kappa) ** 2 / (2.0 * mass)))


def hamiltonian_free(grid_q: GridSpec, mass: float, hbar: float = HBAR) -> Hamiltonian:
    """``p^2 / 2m`` via spectral differentiation."""
    if not mass > 0:
        raise ConfigurationError(f"mass must be positive, got {mass}")
    if not grid_q.periodic:
        raise ConfigurationError("free Hamiltonian needs a periodic spatial grid")
    op = LinearOperator(grid_q, _kinetic(grid_q, mass, hbar), True)
    return Hamiltonian(grid_q, "free", op, mass=mass, hbar=hbar)


def hamiltonian_harmonic(grid_q: GridSpec, mass: float, omega: float,
                         hbar: float = HBAR) -> Hamiltonian:
    """``p^2 / 2m + m omega^2 q^2 / 2`` centred at ``q = 0``.

    The grid must be wide enough that the ground-state Gaussian is below
    1e-12 (relative to its peak) at both ends.
    """
    if not mass > 0:
        raise ConfigurationError(f"mass must be positive, got {mass}")
    if not omega > 0:
        raise ConfigurationError(f"omega must be positive, got {omega}")
    if not grid_q.periodic:
        raise ConfigurationError("harmonic Hamiltonian needs a periodic spatial grid")
    edge = max(abs(grid_q.lo), abs(grid_q.hi))
    if math.exp(-mass * omega * edge**2 / (2.0 * hbar)) >= GROUND_STATE_EDGE_TOL:
        raise ConfigurationError(
            "spatial grid too narrow for the oscillator: ground state does not vanish at the edges"
        )
    q = grid_q.points
    mat = _kinetic(grid_q, mass, hbar) + np.diag(0.5 * mass * omega**2 * q**2)
    op = LinearOperator(grid_q, mat, True)
    return Hamiltonian(grid_q, "harmonic", op, mass=mass, omega=omega, hbar=hbar)


def cayley_step(H: Hamiltonian, dt: float) -> np.ndarray:
    """One Crank-Nicolson step ``(1 + i H dt/2hbar)^-1 (1 - i H dt/2hbar)``."""
    half = 0.5j * dt / H.hbar * H.mat.mat
    eye = np.eye(H.grid_q.n)
    return linalg.solve(eye + half, eye - half)


def solve_constraint(H: Hamiltonian, grid_t: GridSpec, initial: StateVector) -> SpaceTimeState:
    """Propagate ``initial`` over every sample of ``grid_t``.

    Column ``k`` of the result is the wavefunction at ``grid_t.points[k]``,
    with column 0 equal to ``initial``.
    """
    if initial.grid != H.grid_q:
        raise GridMismatchError("initial state is not on the Hamiltonian's grid")
    if not initial.is_normalized:
        raise ConfigurationError(f"initial state must be normalized (norm^2 = {initial.norm2!r})")
    step = cayley_step(H, grid_t.step)
    out = np.empty((H.grid_q.n, grid_t.n), dtype=complex)
    out[:, 0] = initial.amp
    for k in range(1, grid_t.n):
        out[:, k] = step @ out[:, k - 1]
    return SpaceTimeState(H.grid_q, grid_t, out)


def _fd4_time_derivative(amp: np.ndarray, dt: float, cols: np.ndarray) -> np.ndarray:
    return (-amp[:, cols + 2] + 8.0 * amp[:, cols + 1]
            - 8.0 * amp[:, cols - 1] + amp[:, cols - 2]) / (12.0 * dt)


def interior_columns(n_t: int) -> np.ndarray:
    """Central half of the time samples."""
    return np.arange(n_t // 4, n_t - n_t // 4)


def constraint_residual(state: SpaceTimeState, H: Hamiltonian, method: str = "spectral") -> float:
    """Relative residual ``||(I x s) psi - (H x I) psi|| / ||psi||``.

    ``method="spectral"`` differentiates in t with the Fourier energy
    operator over the whole periodic time grid.  ``method="interior"``
    uses a fourth-order central difference and restricts both norms to the
    central half of the time samples, away from the periodic wrap.
    """
    if state.grid_q != H.grid_q:
        raise GridMismatchError("state and Hamiltonian live on different q grids")
    if method == "spectral":
        if not state.grid_t.periodic:
            raise ConfigurationError("spectral residual needs a periodic time grid")
        s_psi = apply_t(energy_operator(state.grid_t, H.hbar), state).amp
        diff = s_psi - apply_q(H.mat, state).amp
        return float(np.linalg.norm(diff) / np.linalg.norm(state.amp))
    if method == "interior":
        cols = interior_columns(state.grid_t.n)
        if cols[0] < 2:
            raise ConfigurationError("time grid too short for the interior residual")
        s_psi = 1j * H.hbar * _fd4_time_derivative(state.amp, state.grid_t.step, cols)
        diff = s_psi - H.mat.mat @ state.amp[:, cols]
        return float(np.linalg.norm(diff) / np.linalg.norm(state.amp[:, cols]))
    raise ConfigurationError(f"unknown residual method {method!r}")


@dataclass(frozen=True)
class EnergySupport:
    """Normalized spectral weight per grid energy, sorted by energy."""

    energies: np.ndarray
    weights: np.ndarray
    resolution: float

    def weight_below(self, energy: float) -> float:
        return float(self.weights[self.energies < energy].sum())

    @property
    def negative_weight(self) -> float:
        """Weight strictly below ``-resolution``."""
        return self.weight_below(-self.resolution)


def kaiser_halfwidth_bins(beta: float) -> float:
    return math.sqrt(1.0 + (beta / math.pi) ** 2)


def energy_support(state: SpaceTimeState, hbar: float = HBAR,
                   window: str | None = None) -> EnergySupport:
    """Distribution of ``psi`` over the energy eigenvalues of the time grid.

    Each q row is Fourier transformed along t; the weights
    ``sum_q |psi~(q, E_k)|^2`` are normalized to unit sum.

    With ``window=None`` the plain DFT is used, which is exact for
    time-periodic states.  ``window="kaiser"`` tapers the time series first,
    suppressing the leakage caused by the wrap of non-periodic solutions;
    ``resolution`` is then the taper's main-lobe half-width (rounded up, plus
    one bin) in energy units.
    """
    grid_t = state.grid_t
    if not grid_t.periodic:
        raise ConfigurationError("energy support needs a periodic time grid")
    quantum = 2.0 * math.pi * hbar / grid_t.length
    amp = state.amp
    if window is None:
        bins = 1.0
    elif window == "kaiser":
        amp = amp * windows.kaiser(grid_t.n, KAISER_BETA, sym=False)[None, :]
        bins = math.ceil(kaiser_halfwidth_bins(KAISER_BETA)) + 1.0
    else:
        raise ConfigurationError(f"unknown window {window!r}")
    spectrum = np.fft.fft(amp, axis=1)
    weights = np.sum(np.abs(spectrum) ** 2, axis=0)
    weights = weights / weights.sum()
    energies = energy_levels(grid_t, hbar)
    order = np.argsort(energies, kind="stable")
    return EnergySupport(energies[order], weights[order], bins * quantum)


def negative_energy_weight(state: SpaceTimeState, hbar: float = HBAR) -> float:
    """Tapered spectral weight below minus the energy resolution."""
    return energy_support(state, hbar, window="kaiser").negative_weight


def norm_drift(state: SpaceTimeState) -> float:
    """Largest deviation of a time slice norm from 1."""
    return float(np.max(np.abs(state.slice_norms() - 1.0)))


def gaussian_packet(grid_q: GridSpec, center: float, width: float,
                    wavenumber: float = 0.0) -> StateVector:
    """``(2 pi w^2)^(-1/4) exp(-(q-c)^2/(4 w^2) + i k (q-c))``, renormalized on the grid.

    ``width`` is the standard deviation of ``|psi|^2``.
    """
    q = grid_q.points
    amp = np.exp(-((q - center) ** 2) / (4.0 * width**2) + 1j * wavenumber * (q - center))
    return StateVector(grid_q, amp).normalized()
