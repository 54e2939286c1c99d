import dataclasses

import numpy as np
import pytest

from chronoslit import detection as D
from chronoslit import experiment as X
from chronoslit.errors import GridMismatchError, InsufficientDataError
from chronoslit.grids import make_grid

COHERENT = X.EmissionModel.coherent_split(0.5)


def flat_pattern(intensity, lo=0.0, hi=1.0):
    screen = make_grid(lo, hi, len(intensity), periodic=False)
    intensity = np.asarray(intensity, dtype=float)
    zeros = np.zeros_like(intensity)
    return X.IntensityPattern(screen, intensity, float(intensity.sum() * screen.step),
                              intensity, zeros, zeros, zeros, None)


@pytest.fixture(scope="module")
def fringes(photon):
    return X.intensity_pattern(photon, COHERENT)


@pytest.fixture(scope="module")
def mixture(photon):
    return X.intensity_pattern(photon, X.EmissionModel.incoherent(0.5, 0.5))


@pytest.fixture(scope="module")
def coarse(photon):
    # the screen spans exactly the three-period window, 20 bins per fringe;
    # V = 0.6 keeps the estimator away from its bound at 1
    screen = make_grid(-0.0075, 0.0075, 61, periodic=False)
    return X.intensity_pattern(dataclasses.replace(photon, screen=screen),
                               X.EmissionModel.coherent_split(0.9))


def test_uniform_pattern_binomial():
    n = 10**6
    hist = D.sample_detections(flat_pattern(np.ones(100)), n, seed=3)
    p = 0.01
    assert hist.total == n
    assert np.all(np.abs(hist.counts - n * p) < 5 * np.sqrt(n * p * (1 - p)))


def test_delta_pattern():
    intensity = np.zeros(50)
    intensity[17] = 1.0
    hist = D.sample_detections(flat_pattern(intensity), 12345, seed=0)
    assert hist.counts[17] == 12345
    assert hist.counts.sum() == 12345


def test_empty_pattern_rejected():
    with pytest.raises(InsufficientDataError):
        D.sample_detections(flat_pattern(np.zeros(10)), 100, seed=0)


def test_fringe_histogram_fits_its_pattern(fringes):
    hist = D.sample_detections(fringes, 10**5, seed=11)
    chi2, dof, p = D.histogram_gof(hist, fringes)
    assert p > 0.01
    assert dof > 100


def test_gof_calibration(fringes):
    p = np.array([D.histogram_gof(D.sample_detections(fringes, 10**5, s), fringes)[2]
                  for s in range(100)])
    assert 0.01 <= np.mean(p < 0.05) <= 0.12


def test_gof_power(fringes, mixture):
    hist = D.sample_detections(fringes, 10**5, seed=1)
    assert D.histogram_gof(hist, mixture)[2] < 1e-6


def test_gof_errors(fringes, coarse):
    empty = D.DetectionHistogram(fringes.screen, np.zeros(fringes.screen.n), 0, 0)
    with pytest.raises(InsufficientDataError):
        D.histogram_gof(empty, fringes)
    with pytest.raises(GridMismatchError):
        D.histogram_gof(D.sample_detections(coarse, 100, 0), fringes)


def test_histogram_invariants(fringes):
    with pytest.raises(ValueError):
        D.DetectionHistogram(fringes.screen, np.ones(fringes.screen.n), 5, 0)
    with pytest.raises(ValueError):
        D.DetectionHistogram(fringes.screen, -np.ones(fringes.screen.n), -fringes.screen.n, 0)


def test_merge_groups_reach_minimum():
    expected = np.array([0.5, 0.5, 6.0, 1.0, 4.5, 10.0, 0.2, 0.1])
    labels = D._merge_groups(expected)
    sums = np.bincount(labels, weights=expected)
    assert np.all(sums >= D.MIN_EXPECTED)
    assert np.all(np.diff(labels) >= 0)


def test_visibility_from_large_histogram(fringes):
    V_true = X.visibility(fringes)
    V, err = D.visibility_from_histogram(D.sample_detections(fringes, 10**6, seed=5))
    assert abs(V - V_true) < 0.02
    assert err < 0.01


def test_single_path_histogram_visibility(photon):
    pat = X.intensity_pattern(photon, X.EmissionModel.single("A"))
    V, _ = D.visibility_from_histogram(D.sample_detections(pat, 10**6, seed=5))
    assert V < 0.03


def test_stderr_scales_with_events(coarse):
    _, small = D.visibility_from_histogram(D.sample_detections(coarse, 10**3, seed=2))
    _, large = D.visibility_from_histogram(D.sample_detections(coarse, 10**6, seed=2))
    assert small >= 5 * large


def test_too_few_events(fringes):
    with pytest.raises(InsufficientDataError, match="accumulate more"):
        D.visibility_from_histogram(D.sample_detections(fringes, 1000, seed=0))


def test_sampling_is_deterministic(fringes):
    a = D.sample_detections(fringes, 50_000, seed=9)
    b = D.sample_detections(fringes, 50_000, seed=9)
    c = D.sample_detections(fringes, 50_000, seed=10)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_shards_independent_of_workers(fringes):
    n = 3 * D.SHARD_SIZE + 1234
    one = D.sample_detections(fringes, n, seed=4, workers=1)
    many = D.sample_detections(fringes, n, seed=4, workers=4)
    assert np.array_equal(one.counts, many.counts)


def test_frequency_error_slope(fringes):
    ns = np.array([10**3, 10**4, 10**5, 10**6])
    err = [D.frequency_error(D.sample_detections(fringes, int(n), seed=0), fringes) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_disjoint_seeds_are_compatible(fringes):
    fails = 0
    for i in range(20):
        a = D.sample_detections(fringes, 10**5, seed=1000 + 2 * i)
        b = D.sample_detections(fringes, 10**5, seed=1001 + 2 * i)
        fails += D.compare_histograms(a, b)[2] <= 0.001
    assert fails <= 1


def test_compare_detects_different_sources(fringes, mixture):
    a = D.sample_detections(fringes, 10**5, seed=1)
    b = D.sample_detections(mixture, 10**5, seed=2)
    assert D.compare_histograms(a, b)[2] < 1e-6
