"""Event-by-event detection statistics on the screen.

Events are drawn from the normalized intensity by inverse-CDF lookup over
the screen bins.  Random numbers come from the counter-based Philox
generator: the events are cut into fixed-size shards and shard ``i`` uses
the stream keyed by ``SeedSequence([seed, i])``.  The shard layout depends
only on ``n_events``, so any number of workers yields the same histogram.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import GridMismatchError, InsufficientDataError
from .experiment import (
    IntensityPattern,
    _window_indices,
    check_window,
    default_window,
    extremum_visibility,
    worker_count,
)
from .grids import GridSpec

SHARD_SIZE = 1 << 18
MIN_EXPECTED = 5.0
MIN_WINDOW_COUNTS = 10.0
BOOTSTRAP_RESAMPLES = 200
# stream key reserved for bootstrap resampling; event shards count up from 0
BOOTSTRAP_STREAM = 2**32 - 1


@dataclass(frozen=True, eq=False)
class DetectionHistogram:
    screen: GridSpec
    counts: np.ndarray
    total: int
    seed: int
    fringe_spacing: float | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.screen.n,) or np.any(counts < 0):
            raise ValueError("counts must be non-negative with one entry per screen sample")
        if int(counts.sum()) != self.total:
            raise ValueError(f"counts sum to {int(counts.sum())}, expected total {self.total}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def frequencies(self) -> np.ndarray:
        if self.total == 0:
            raise InsufficientDataError("histogram holds no events")
        return self.counts / self.total


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, shard])))


def _draw_shard(cdf: np.ndarray, seed: int, shard: int, size: int) -> np.ndarray:
    u = shard_rng(seed, shard).random(size)
    bins = np.searchsorted(cdf, u, side="right")
    return np.bincount(np.minimum(bins, cdf.size - 1), minlength=cdf.size)


def sample_detections(pattern: IntensityPattern, n_events: int, seed: int,
                      workers: int | None = 1) -> DetectionHistogram:
    """Accumulate ``n_events`` independent detections into screen bins."""
    if pattern.empty:
        raise InsufficientDataError("cannot sample from an empty pattern")
    if n_events < 1:
        raise ValueError(f"n_events must be >= 1, got {n_events}")
    cdf = np.cumsum(pattern.probabilities)
    cdf /= cdf[-1]
    sizes = [SHARD_SIZE] * (n_events // SHARD_SIZE)
    if n_events % SHARD_SIZE:
        sizes.append(n_events % SHARD_SIZE)
    jobs = list(enumerate(sizes))

    def run(job):
        return _draw_shard(cdf, seed, *job)

    n = min(worker_count(workers), len(jobs))
    if n == 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(run, jobs))
    counts = np.sum(parts, axis=0)
    return DetectionHistogram(pattern.screen, counts, int(n_events), int(seed),
                              pattern.fringe_spacing)


def _merge_groups(expected: np.ndarray) -> np.ndarray:
    """Group labels for adjacent bins so each group expects >= 5 counts."""
    labels = np.empty(expected.size, dtype=np.int64)
    group, acc = 0, 0.0
    for i, e in enumerate(expected):
        labels[i] = group
        acc += e
        if acc >= MIN_EXPECTED:
            group += 1
            acc = 0.0
    # an underfilled tail joins the last complete group
    if group > 0 and labels[-1] == group:
        labels[labels == group] = group - 1
    return labels


def histogram_gof(hist: DetectionHistogram, pattern: IntensityPattern):
    """Pearson chi-square of ``hist`` against ``pattern``.

    Adjacent bins are merged until every group expects at least 5 counts.
    Returns ``(chi2, dof, p_value)``.
    """
    if hist.screen != pattern.screen:
        raise GridMismatchError("histogram and pattern use different screen grids")
    if hist.total == 0:
        raise InsufficientDataError("histogram holds no events")
    expected = hist.total * pattern.probabilities
    labels = _merge_groups(expected)
    n_groups = int(labels.max()) + 1
    exp_g = np.bincount(labels, weights=expected, minlength=n_groups)
    obs_g = np.bincount(labels, weights=hist.counts, minlength=n_groups)
    dof = n_groups - 1
    if dof < 1:
        raise InsufficientDataError("too few events to form two chi-square groups")
    chi2 = float(np.sum((obs_g - exp_g) ** 2 / exp_g))
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


def compare_histograms(a: DetectionHistogram, b: DetectionHistogram):
    """Two-sample Pearson chi-square test that ``a`` and ``b`` share one distribution.

    Adjacent bins are merged until both samples expect at least 5 counts per
    group under the pooled frequencies.  Returns ``(chi2, dof, p_value)``.
    """
    if a.screen != b.screen:
        raise GridMismatchError("histograms use different screen grids")
    if a.total == 0 or b.total == 0:
        raise InsufficientDataError("histogram holds no events")
    pooled = (a.counts + b.counts) / (a.total + b.total)
    labels = _merge_groups(min(a.total, b.total) * pooled)
    n_groups = int(labels.max()) + 1
    if n_groups < 2:
        raise InsufficientDataError("too few events to form two chi-square groups")
    p_g = np.bincount(labels, weights=pooled, minlength=n_groups)
    chi2 = 0.0
    for h in (a, b):
        obs = np.bincount(labels, weights=h.counts, minlength=n_groups)
        chi2 += float(np.sum((obs - h.total * p_g) ** 2 / (h.total * p_g)))
    dof = n_groups - 1
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


def _smoothed_counts(counts: np.ndarray, x: np.ndarray, idx: np.ndarray,
                     spacing: float) -> np.ndarray:
    """Least-squares fringe model over the window, evaluated on the screen."""
    k = 2.0 * np.pi / spacing
    xc = x / (x[idx].max() - x[idx].min())

    def design(xs, xcs):
        c, s = np.cos(k * xs), np.sin(k * xs)
        return np.column_stack([np.ones_like(xs), xcs, xcs**2, c, s, xcs * c, xcs * s])

    coef, *_ = np.linalg.lstsq(design(x[idx], xc[idx]), counts[idx].astype(float), rcond=None)
    return design(x, xc) @ coef


def _histogram_visibility(counts: np.ndarray, x: np.ndarray, idx: np.ndarray,
                          spacing: float) -> float:
    return extremum_visibility(_smoothed_counts(counts, x, idx, spacing), idx)


def visibility_from_histogram(hist: DetectionHistogram, window: float | None = None):
    """Fringe visibility of a count histogram and its bootstrap standard error.

    Raw per-bin extrema are biased upward by shot noise, so the counts in
    the window are first fitted with a fringe model at the analytic spacing
    (a slow quadratic background plus cosine and sine terms with linear
    envelopes).  The extremum visibility of that fit is the estimate; the
    standard error is the spread over 200 multinomial resamples drawn from
    the run seed.  Returns ``(V, stderr)``.
    """
    if hist.fringe_spacing is None:
        raise InsufficientDataError("histogram carries no fringe spacing")
    if window is None:
        window = default_window(hist)
    check_window(window, hist.fringe_spacing)
    idx = _window_indices(hist.screen, window)
    if hist.counts[idx].mean() < MIN_WINDOW_COUNTS:
        raise InsufficientDataError(
            f"mean count per window bin {hist.counts[idx].mean():.2f} is below "
            f"{MIN_WINDOW_COUNTS:g}; accumulate more events"
        )
    x = hist.screen.points
    V = _histogram_visibility(hist.counts, x, idx, hist.fringe_spacing)
    rng = shard_rng(hist.seed, BOOTSTRAP_STREAM)
    resampled = rng.multinomial(hist.total, hist.frequencies, size=BOOTSTRAP_RESAMPLES)
    boot = [_histogram_visibility(r, x, idx, hist.fringe_spacing) for r in resampled]
    return V, float(np.std(boot, ddof=1))


def frequency_error(hist: DetectionHistogram, pattern: IntensityPattern) -> float:
    """``max |counts/total - p|`` against the pattern's bin probabilities."""
    return float(np.max(np.abs(hist.frequencies - pattern.probabilities)))
