"""Discrete time, energy, position and momentum operators.

The energy operator acts as ``i*hbar d/dt`` and the momentum operator as
``-i*hbar d/dq``; both are built from the discrete-Fourier first derivative,
so plane waves commensurate with the grid are exact eigenvectors.  On an
``n``-point grid of length ``L`` both spectra are ``2*pi*hbar*k/L`` for
``k = -n/2 .. n/2 - 1`` (for even ``n``).

Canonical commutators cannot hold as matrix identities in finite dimension
(the trace of a commutator is zero), so they are checked as actions on
band-limited probes supported away from the grid ends.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .grids import HBAR, GridSpec, SpaceTimeState, StateVector, _check_same_grid

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
BAND_LIMIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearOperator:
    grid: GridSpec
    mat: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        if mat.shape != (self.grid.n, self.grid.n):
            raise ConfigurationError(
                f"operator matrix has shape {mat.shape}, grid expects {self.grid.n}x{self.grid.n}"
            )
        if self.hermitian_hint and hermiticity_residual(mat) > HERMITIAN_TOL:
            raise ConfigurationError(
                f"operator flagged hermitian has residual {hermiticity_residual(mat):.3e}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def apply(self, state: StateVector) -> StateVector:
        _check_same_grid(self.grid, state.grid)
        return StateVector(self.grid, self.mat @ state.amp)

    def __call__(self, state: StateVector) -> StateVector:
        return self.apply(state)

    def __matmul__(self, other: LinearOperator) -> LinearOperator:
        _check_same_grid(self.grid, other.grid)
        return LinearOperator(self.grid, self.mat @ other.mat)

    def __add__(self, other: LinearOperator) -> LinearOperator:
        _check_same_grid(self.grid, other.grid)
        return LinearOperator(self.grid, self.mat + other.mat,
                              self.hermitian_hint and other.hermitian_hint)

    def __sub__(self, other: LinearOperator) -> LinearOperator:
        _check_same_grid(self.grid, other.grid)
        return LinearOperator(self.grid, self.mat - other.mat,
                              self.hermitian_hint and other.hermitian_hint)

    def scaled(self, factor: complex) -> LinearOperator:
        keep = self.hermitian_hint and complex(factor).imag == 0.0
        return LinearOperator(self.grid, self.mat * factor, keep)

    def hermiticity_residual(self) -> float:
        return hermiticity_residual(self.mat)


def hermiticity_residual(mat: np.ndarray) -> float:
    """``max |M - M^H|``."""
    return float(np.max(np.abs(mat - mat.conj().T)))


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def identity(grid: GridSpec) -> LinearOperator:
    return LinearOperator(grid, np.eye(grid.n), True)


def wavenumbers(grid: GridSpec, nyquist_sign: int = -1) -> np.ndarray:
    """Angular wavenumbers in FFT order.

    For even ``n`` the Nyquist mode is ambiguous; it is assigned
    ``nyquist_sign * pi * n / L``.
    """
    kappa = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.step)
    if grid.n % 2 == 0:
        kappa[grid.n // 2] = nyquist_sign * np.pi * grid.n / grid.length
    return kappa


def fourier_multiplier(grid: GridSpec, symbol: np.ndarray) -> np.ndarray:
    """Dense matrix of ``ifft(symbol * fft(.))``."""
    return np.fft.ifft(symbol[:, None] * np.fft.fft(np.eye(grid.n), axis=0), axis=0)


def derivative_matrix(grid: GridSpec, nyquist_sign: int = -1) -> np.ndarray:
    """Spectral first-derivative matrix on a periodic grid (anti-hermitian)."""
    if not grid.periodic:
        raise ConfigurationError("spectral differentiation needs a periodic grid")
    d = fourier_multiplier(grid, 1j * wavenumbers(grid, nyquist_sign))
    return 0.5 * (d - d.conj().T)


def time_operator(grid_t: GridSpec) -> LinearOperator:
    """Multiplication by the sample times."""
    return LinearOperator(grid_t, np.diag(grid_t.points.astype(complex)), True)


def position_operator(grid_q: GridSpec) -> LinearOperator:
    return LinearOperator(grid_q, np.diag(grid_q.points.astype(complex)), True)


def energy_operator(grid_t: GridSpec, hbar: float = HBAR) -> LinearOperator:
    """``i*hbar d/dt``; eigenvectors ``exp(E t/(i hbar))``."""
    # Nyquist wavenumber +pi n/L puts the Nyquist energy at -pi hbar n/L.
    return LinearOperator(grid_t, _hermitize(1j * hbar * derivative_matrix(grid_t, +1)), True)


def momentum_operator(grid_q: GridSpec, hbar: float = HBAR) -> LinearOperator:
    """``-i*hbar d/dq``; eigenvectors ``exp(i p q / hbar)``."""
    return LinearOperator(grid_q, _hermitize(-1j * hbar * derivative_matrix(grid_q, -1)), True)


def energy_levels(grid_t: GridSpec, hbar: float = HBAR) -> np.ndarray:
    """Eigenvalue of ``energy_operator`` on ``fft`` bin ``m``, in FFT order."""
    return -hbar * wavenumbers(grid_t, +1)


def _diagonal_of(mat: np.ndarray) -> np.ndarray | None:
    d = np.diag(mat)
    if np.array_equal(mat, np.diag(d)):
        return d
    return None


def commutator(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    """``AB - BA``.

    When either factor is diagonal the entries are formed as
    ``(a_j - a_k) B_jk``, which avoids cancelling two large products (time
    grids in seconds often sit far from the origin).
    """
    _check_same_grid(A.grid, B.grid)
    a = _diagonal_of(A.mat)
    if a is not None:
        return LinearOperator(A.grid, (a[:, None] - a[None, :]) * B.mat)
    b = _diagonal_of(B.mat)
    if b is not None:
        return LinearOperator(A.grid, (b[None, :] - b[:, None]) * A.mat)
    return LinearOperator(A.grid, A.mat @ B.mat - B.mat @ A.mat)


def spectral_tail_ratio(state: StateVector) -> float:
    """Largest DFT coefficient in the top third of frequencies, relative to the peak."""
    coeff = np.abs(np.fft.fft(state.amp))
    freq = np.abs(np.fft.fftfreq(state.grid.n)) * state.grid.n
    peak = coeff.max()
    if peak == 0.0:
        return 0.0
    return float(coeff[freq >= state.grid.n / 3].max() / peak)


def canonical_residual(
    A: LinearOperator,
    B: LinearOperator,
    sign: int,
    probe: StateVector,
    hbar: float = HBAR,
) -> float:
    """``|| ((1/(i hbar)) [A, B] - sign * I) probe ||``.

    A probe with spectral content in the top third of frequencies above
    1e-10 of its peak triggers a warning; the residual is still returned.
    """
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
    _check_same_grid(A.grid, B.grid)
    _check_same_grid(A.grid, probe.grid)
    tail = spectral_tail_ratio(probe)
    if tail > BAND_LIMIT_TOL:
        warnings.warn(
            f"probe is not band-limited (tail ratio {tail:.2e}); residual may be inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    psi = probe.amp
    resid = (commutator(A, B).mat @ psi) / (1j * hbar) - sign * psi
    return float(np.sqrt(np.sum(np.abs(resid) ** 2) * probe.grid.step))


def eigen_residual(op: LinearOperator, state: StateVector, value: float) -> float:
    """``|| op psi - value psi ||``."""
    return (op.apply(state) - state * value).norm


def snap_energy(grid_t: GridSpec, E: float, hbar: float = HBAR) -> tuple[float, int]:
    """Nearest grid energy ``2 pi hbar k / L`` and its integer ``k``."""
    quantum = 2.0 * np.pi * hbar / grid_t.length
    k = int(np.rint(E / quantum))
    half = grid_t.n // 2
    k = min(max(k, -half), grid_t.n - half - 1)
    return k * quantum, k


def energy_eigenvector(grid_t: GridSpec, E: float, hbar: float = HBAR) -> StateVector:
    """Normalized sampled ``exp(E t / (i hbar))``.

    Energies off the grid lattice ``2 pi hbar k / L`` are snapped to the
    nearest lattice value with a logged warning.
    """
    snapped, _ = snap_energy(grid_t, E, hbar)
    quantum = 2.0 * np.pi * hbar / grid_t.length
    if abs(snapped - E) > 1e-9 * quantum:
        log.warning("energy %.6e is not commensurate with the time grid; snapped to %.6e",
                    E, snapped)
    amp = np.exp(-1j * snapped * grid_t.points / hbar) / np.sqrt(grid_t.length)
    return StateVector(grid_t, amp)


def gaussian_probe(grid: GridSpec, center: float, width: float, wavenumber: float = 0.0,
                   phase: float = 0.0) -> StateVector:
    """Normalized ``exp(-(x-c)^2/(2 w^2) + i k x + i phase)`` on ``grid``."""
    x = grid.points
    amp = np.exp(-0.5 * ((x - center) / width) ** 2 + 1j * (wavenumber * (x - center) + phase))
    return StateVector(grid, amp).normalized()


def probe_suite(grid: GridSpec, count: int = 20, seed: int = 20210630) -> list[StateVector]:
    """Fixed family of smooth, interior-supported probes.

    Parameters are drawn in units of the grid interval, so the same
    continuum functions are sampled on every grid of the same extent.  The
    width range keeps the probes band-limited down to ``n = 64`` while
    their tails at the grid ends stay below 1e-16.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    L = grid.length
    probes = []
    for i in range(count):
        c = grid.lo + L * (0.5 + rng.uniform(-0.01, 0.01))
        w = L * rng.uniform(0.053, 0.055)
        k = 2.0 * np.pi / L * rng.uniform(-0.8, 0.8)
        amp = gaussian_probe(grid, c, w, k).amp
        if i % 2:
            # second lobe with a random relative phase
            c2 = c + L * rng.uniform(-0.005, 0.005)
            amp = amp + rng.uniform(0.2, 1.0) * gaussian_probe(
                grid, c2, w, -k, rng.uniform(0, 2 * np.pi)).amp
        probes.append(StateVector(grid, amp).normalized())
    return probes


def apply_q(op: LinearOperator, state: SpaceTimeState) -> SpaceTimeState:
    """``(op (x) I) psi``."""
    if op.grid != state.grid_q:
        raise GridMismatchError("operator grid does not match the q grid of the state")
    return SpaceTimeState(state.grid_q, state.grid_t, op.mat @ state.amp)


def apply_t(op: LinearOperator, state: SpaceTimeState) -> SpaceTimeState:
    """``(I (x) op) psi``."""
    if op.grid != state.grid_t:
        raise GridMismatchError("operator grid does not match the t grid of the state")
    return SpaceTimeState(state.grid_q, state.grid_t, state.amp @ op.mat.T)


def product_commutator(op_a, slot_a: str, op_b, slot_b: str, state: SpaceTimeState) -> np.ndarray:
    """``[op_a lifted to slot_a, op_b lifted to slot_b] psi`` as an amplitude matrix."""
    lift = {"q": apply_q, "t": apply_t}
    ab = lift[slot_a](op_a, lift[slot_b](op_b, state))
    ba = lift[slot_b](op_b, lift[slot_a](op_a, state))
    return ab.amp - ba.amp
