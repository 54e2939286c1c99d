"""Two-path model of the rotating-source double slit.

A source inside a rotating container emits towards the long route at
``t1`` and towards the short route at ``t1 + delta_T``.  Path A (long) runs
through the slit at ``+d/2`` and carries an extra pre-slit length
``extra_long_path``; path B (short) runs through the slit at ``-d/2``.
Each route contributes a scalar quasi-monochromatic amplitude with a
Gaussian envelope of RMS width ``pulse_sigma``; the two envelopes overlap
at a screen point ``x`` when

    (L_A(x) - L_B(x)) / v_group == delta_T.

Only a coherent superposition of the two emission moments yields the cross
term that draws fringes; single-moment and mixed emission do not.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .grids import HBAR, GridSpec

PARAXIAL_RATIO = 5.0
PULSE_RULE = 10.0
EMISSION_NORM_TOL = 1e-12
QUAD_HALF_SPAN = 12.0
QUAD_POINTS = 801
SCAN_PARAMETERS = ("delta_T", "pulse_sigma", "weight_split")


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry, timing and wave parameters of the apparatus (SI units)."""

    wavelength: float
    v_group: float
    v_phase: float
    slit_separation: float
    screen_distance: float
    extra_long_path: float
    delta_T: float
    pulse_sigma: float
    t1: float
    screen: GridSpec
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("wavelength", "v_group", "v_phase", "slit_separation",
                     "screen_distance", "pulse_sigma", "hbar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be strictly positive, got {value!r}")
        for name in ("extra_long_path", "delta_T", "t1"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be non-negative, got {value!r}")
        if not self.slit_separation < self.screen_distance / PARAXIAL_RATIO:
            raise ConfigurationError(
                "slit_separation must be below screen_distance/5 for the paraxial model"
            )
        if not self.pulse_sigma <= self.delta_T / PULSE_RULE:
            raise ConfigurationError(
                f"pulse_sigma={self.pulse_sigma!r} violates the pulse-duration rule "
                f"pulse_sigma <= delta_T/10 (delta_T={self.delta_T!r}): the pulse must be "
                "much shorter than the container half-turn time"
            )

    @property
    def fringe_spacing(self) -> float:
        """Paraxial spacing ``lambda D / d``."""
        return self.wavelength * self.screen_distance / self.slit_separation

    @property
    def tuned_delta_T(self) -> float:
        """The half-turn time that synchronizes the two routes at the screen centre."""
        return self.extra_long_path / self.v_group

    @property
    def angular_frequency(self) -> float:
        return 2.0 * np.pi * self.v_phase / self.wavelength


def unchecked_config(**fields) -> ExperimentConfig:
    """Build a config without invariant checks, for degenerate-geometry probes.

    Normal code should construct :class:`ExperimentConfig` directly.
    """
    cfg = object.__new__(ExperimentConfig)
    for f in dataclasses.fields(ExperimentConfig):
        value = fields.pop(f.name, f.default)
        if value is dataclasses.MISSING:
            raise TypeError(f"missing field {f.name!r}")
        object.__setattr__(cfg, f.name, value)
    if fields:
        raise TypeError(f"unknown fields {sorted(fields)}")
    return cfg


@dataclass(frozen=True)
class EmissionModel:
    """How the source distributes one emission over the two moments.

    Use the :meth:`coherent`, :meth:`single` and :meth:`incoherent`
    constructors rather than filling the fields by hand.
    """

    variant: str
    cA: complex = 0j
    cB: complex = 0j
    pA: float = 0.0
    pB: float = 0.0

    def __post_init__(self):
        if self.variant == "coherent":
            total = abs(self.cA) ** 2 + abs(self.cB) ** 2
            if abs(total - 1.0) > EMISSION_NORM_TOL:
                raise ConfigurationError(
                    f"coherent weights must satisfy |cA|^2+|cB|^2=1, got {total!r}")
        elif self.variant in ("incoherent", "single:A", "single:B"):
            if min(self.pA, self.pB) < 0 or abs(self.pA + self.pB - 1.0) > EMISSION_NORM_TOL:
                raise ConfigurationError(
                    "mixture probabilities must be non-negative and sum to 1, "
                    f"got {self.pA}, {self.pB}"
                )
        else:
            raise ConfigurationError(f"unknown emission variant {self.variant!r}")

    @classmethod
    def coherent(cls, cA: complex, cB: complex) -> EmissionModel:
        return cls("coherent", cA=complex(cA), cB=complex(cB))

    @classmethod
    def coherent_split(cls, weight_a: float, relative_phase: float = 0.0) -> EmissionModel:
        """Coherent emission with ``|cA|^2 = weight_a``, ``arg(cA conj(cB)) = relative_phase``."""
        if not 0.0 <= weight_a <= 1.0:
            raise ConfigurationError(f"weight_a must lie in [0, 1], got {weight_a!r}")
        cA = np.sqrt(weight_a)
        cB = np.sqrt(1.0 - weight_a) * np.exp(-1j * relative_phase)
        return cls.coherent(cA, cB)

    @classmethod
    def single(cls, which: str) -> EmissionModel:
        if which not in ("A", "B"):
            raise ConfigurationError(f"single emission must be 'A' or 'B', got {which!r}")
        pA = 1.0 if which == "A" else 0.0
        return cls(f"single:{which}", pA=pA, pB=1.0 - pA)

    @classmethod
    def incoherent(cls, pA: float, pB: float) -> EmissionModel:
        return cls("incoherent", pA=float(pA), pB=float(pB))

    @property
    def label(self) -> str:
        return self.variant

    @property
    def weights(self) -> tuple[float, float]:
        """Single-path weights ``(|cA|^2, |cB|^2)`` or ``(pA, pB)``."""
        if self.variant == "coherent":
            return abs(self.cA) ** 2, abs(self.cB) ** 2
        return self.pA, self.pB


@dataclass(frozen=True, eq=False)
class IntensityPattern:
    screen: GridSpec
    intensity: np.ndarray
    normalization: float
    path_A_intensity: np.ndarray
    path_B_intensity: np.ndarray
    gamma: np.ndarray
    phase: np.ndarray
    fringe_spacing: float | None = None

    @property
    def empty(self) -> bool:
        return not self.normalization > 0

    @property
    def probabilities(self) -> np.ndarray:
        """Per-sample detection probabilities (unit sum)."""
        if self.empty:
            raise InsufficientDataError("pattern is empty")
        return self.intensity / self.intensity.sum()


def path_difference(cfg: ExperimentConfig, x):
    """``L_A(x) - L_B(x)`` without cancelling the two long distances."""
    x = np.asarray(x, dtype=float)
    D, h = cfg.screen_distance, cfg.slit_separation / 2.0
    sA = np.hypot(D, x - h)
    sB = np.hypot(D, x + h)
    # (x-h)^2 - (x+h)^2 = -4 h x
    return cfg.extra_long_path + (-4.0 * h * x) / (sA + sB)


def path_lengths(cfg: ExperimentConfig, x):
    """Source-to-screen lengths ``(L_A, L_B)`` of the long and short routes at ``x``."""
    x = np.asarray(x, dtype=float)
    D, h = cfg.screen_distance, cfg.slit_separation / 2.0
    L_A = cfg.extra_long_path + np.hypot(D, x - h)
    L_B = np.hypot(D, x + h)
    if L_A.ndim == 0:
        return float(L_A), float(L_B)
    return L_A, L_B


def synchrony_mismatch(cfg: ExperimentConfig, x):
    """Arrival-time offset of the two envelopes at ``x`` (seconds); zero is perfect overlap."""
    delta = path_difference(cfg, x) / cfg.v_group - cfg.delta_T
    return float(delta) if np.ndim(delta) == 0 else delta


def gaussian_envelope(tau, sigma: float):
    """Unit-peak Gaussian of RMS width ``sigma``."""
    return np.exp(-0.5 * (np.asarray(tau) / sigma) ** 2)


def envelope_overlap(cfg_or_sigma, delta):
    """Normalized envelope autocorrelation ``gamma(delta)`` in [0, 1].

    Computed by trapezoidal quadrature of ``g(tau) g(tau - delta)`` on a
    grid centred on the overlap midpoint and spanning +-12 sigma, which is
    exact to machine precision for the Gaussian envelope.  Accepts either a
    config or a bare ``sigma``.
    """
    sigma = getattr(cfg_or_sigma, "pulse_sigma", cfg_or_sigma)
    if not sigma > 0:
        raise ConfigurationError(f"pulse_sigma must be positive, got {sigma!r}")
    delta = np.asarray(delta, dtype=float)
    u = np.linspace(-QUAD_HALF_SPAN * sigma, QUAD_HALF_SPAN * sigma, QUAD_POINTS)
    du = u[1] - u[0]

    def overlap(d):
        tau = d[..., None] / 2.0 + u
        vals = gaussian_envelope(tau, sigma) * gaussian_envelope(tau - d[..., None], sigma)
        return np.trapezoid(vals, dx=du, axis=-1)

    gamma = np.abs(overlap(delta)) / overlap(np.zeros(()))
    gamma = np.clip(gamma, 0.0, 1.0)
    return float(gamma) if gamma.ndim == 0 else gamma


def intensity_pattern(cfg: ExperimentConfig, emission: EmissionModel,
                      cross_term: bool = True) -> IntensityPattern:
    """Screen intensity for the given emission model.

    Path amplitudes fall off as ``1/L``.  For coherent emission the cross
    term ``2 gamma Re[cA conj(cB) a_A a_B exp(i phi)]`` is added, with
    ``phi = 2 pi (L_A - L_B - v_phase delta_T) / lambda``.  ``cross_term=False``
    drops it, which must reproduce the matching incoherent mixture.
    """
    x = cfg.screen.points
    L_A, L_B = path_lengths(cfg, x)
    a_A, a_B = 1.0 / L_A, 1.0 / L_B
    gamma = envelope_overlap(cfg, synchrony_mismatch(cfg, x))
    # both terms are a few metres; subtract before scaling by 2 pi / lambda
    phase = 2.0 * np.pi * (path_difference(cfg, x) - cfg.v_phase * cfg.delta_T) / cfg.wavelength
    wA, wB = emission.weights
    P_A, P_B = wA * a_A**2, wB * a_B**2
    intensity = P_A + P_B
    if emission.variant == "coherent" and cross_term:
        cross = emission.cA * np.conj(emission.cB) * np.exp(1j * phase)
        intensity = intensity + 2.0 * gamma * a_A * a_B * cross.real
        intensity = np.maximum(intensity, 0.0)
    normalization = float(np.sum(intensity) * cfg.screen.step)
    return IntensityPattern(
        screen=cfg.screen,
        intensity=intensity,
        normalization=normalization,
        path_A_intensity=P_A,
        path_B_intensity=P_B,
        gamma=np.broadcast_to(gamma, x.shape).copy(),
        phase=phase,
        fringe_spacing=cfg.fringe_spacing,
    )


def _window_indices(screen: GridSpec, window: float) -> np.ndarray:
    x = screen.points
    idx = np.flatnonzero(np.abs(x) <= window / 2.0)
    if idx.size < 3:
        raise InsufficientDataError(f"window {window!r} holds fewer than 3 screen samples")
    return idx


def _parabolic_vertex(y: np.ndarray, i: int) -> tuple[float, float]:
    """Refined (offset, value) of the extremum at sample ``i``."""
    if i <= 0 or i >= y.size - 1:
        return 0.0, float(y[i])
    ym, y0, yp = y[i - 1], y[i], y[i + 1]
    curv = ym - 2.0 * y0 + yp
    if curv == 0.0:
        return 0.0, float(y0)
    off = 0.5 * (ym - yp) / curv
    if abs(off) > 1.0:
        return 0.0, float(y0)
    return float(off), float(y0 - 0.25 * (ym - yp) * off)


def extremum_visibility(values: np.ndarray, idx: np.ndarray) -> float:
    """``(max - min)/(max + min)`` of ``values`` over ``idx`` with parabolic refinement."""
    window_vals = values[idx]
    i_max = int(idx[np.argmax(window_vals)])
    i_min = int(idx[np.argmin(window_vals)])
    _, vmax = _parabolic_vertex(values, i_max)
    _, vmin = _parabolic_vertex(values, i_min)
    vmax = max(vmax, float(values[i_max]))
    vmin = max(min(vmin, float(values[i_min])), 0.0)
    if vmax + vmin <= 0.0:
        raise InsufficientDataError("flat zero pattern in window; visibility undefined")
    return float((vmax - vmin) / (vmax + vmin))


def check_window(window: float, spacing: float | None) -> None:
    if not window > 0:
        raise InsufficientDataError(f"window must be positive, got {window!r}")
    if spacing is not None and window < 3.0 * spacing * (1.0 - 1e-9):
        raise InsufficientDataError(
            f"window {window:.3e} m spans fewer than 3 fringe periods of {spacing:.3e} m"
        )


def default_window(pattern_or_cfg) -> float:
    return 3.0 * pattern_or_cfg.fringe_spacing


def visibility(pattern: IntensityPattern, window: float | None = None) -> float:
    """Fringe visibility over a window of full width ``window`` centred on ``x = 0``.

    The default window is three analytic fringe periods.
    """
    if window is None:
        window = default_window(pattern)
    check_window(window, pattern.fringe_spacing)
    idx = _window_indices(pattern.screen, window)
    return extremum_visibility(pattern.intensity, idx)


def fringe_spacing(pattern: IntensityPattern, window: float | None = None) -> float:
    """Mean distance between adjacent refined maxima in the central window."""
    if window is None:
        window = default_window(pattern)
    idx = _window_indices(pattern.screen, window)
    y = pattern.intensity
    inner = idx[(idx > 0) & (idx < y.size - 1)]
    peaks = inner[(y[inner] > y[inner - 1]) & (y[inner] >= y[inner + 1])]
    if peaks.size < 2:
        raise InsufficientDataError("fewer than two fringe maxima in the window")
    step = pattern.screen.step
    pos = np.array([pattern.screen.points[i] + _parabolic_vertex(y, int(i))[0] * step
                    for i in peaks])
    return float(np.mean(np.diff(pos)))


def _scan_point(cfg: ExperimentConfig, emission: EmissionModel, parameter: str,
                value: float, window: float | None) -> float:
    if parameter == "delta_T":
        cfg = dataclasses.replace(cfg, delta_T=float(value))
    elif parameter == "pulse_sigma":
        cfg = dataclasses.replace(cfg, pulse_sigma=float(value))
    elif parameter == "weight_split":
        if emission.variant == "coherent":
            phase = float(np.angle(emission.cA * np.conj(emission.cB)))
            emission = EmissionModel.coherent_split(float(value), phase)
        else:
            emission = EmissionModel.incoherent(float(value), 1.0 - float(value))
    else:
        raise ConfigurationError(f"unknown scan parameter {parameter!r}; "
                                 f"choose from {', '.join(SCAN_PARAMETERS)}")
    return visibility(intensity_pattern(cfg, emission), window)


def worker_count(requested: int | None = None) -> int:
    """Worker threads, capped by ``CHRONOSLIT_THREADS`` when set."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("CHRONOSLIT_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def visibility_scan(cfg: ExperimentConfig, emission: EmissionModel, parameter: str,
                    values, window: float | None = None,
                    workers: int | None = None) -> list[tuple[float, float]]:
    """Visibility at each parameter value, in input order.

    ``parameter`` is ``delta_T``, ``pulse_sigma`` (seconds) or
    ``weight_split`` (``|cA|^2``, or ``pA`` for mixed emission).  The window
    is fixed from the base config so every point is measured alike.
    """
    if parameter not in SCAN_PARAMETERS:
        raise ConfigurationError(f"unknown scan parameter {parameter!r}; "
                                 f"choose from {', '.join(SCAN_PARAMETERS)}")
    values = [float(v) for v in values]
    if window is None:
        window = default_window(cfg)

    def point(v):
        return _scan_point(cfg, emission, parameter, v, window)

    n = min(worker_count(workers), max(1, len(values)))
    if n == 1:
        vis = [point(v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            vis = list(pool.map(point, values))
    return list(zip(values, vis))


def emission_gate(cfg: ExperimentConfig, t_emit: float) -> tuple[float, float]:
    """Gaussian opening weights of the long (A) and short (B) routes at ``t_emit``."""
    s = cfg.pulse_sigma
    wA = float(np.exp(-((t_emit - cfg.t1) ** 2) / (2.0 * s**2)))
    wB = float(np.exp(-((t_emit - cfg.t1 - cfg.delta_T) ** 2) / (2.0 * s**2)))
    return wA, wB
