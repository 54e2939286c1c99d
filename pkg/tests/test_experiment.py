import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronoslit import experiment as X
from chronoslit.errors import ConfigurationError, InsufficientDataError
from chronoslit.grids import make_grid
from oracles import quad_overlap

COHERENT = X.EmissionModel.coherent_split(0.5)


def geometry(**overrides):
    base = dict(wavelength=5e-7, v_group=3e8, v_phase=3e8, slit_separation=1e-4,
                screen_distance=1.0, extra_long_path=0.0, delta_T=0.0, pulse_sigma=1e-12,
                t1=0.0, screen=make_grid(-0.05, 0.05, 1001, periodic=False))
    base.update(overrides)
    return X.unchecked_config(**base)


def test_symmetric_paths():
    cfg = geometry(slit_separation=2e-3, screen_distance=20.0)
    L_A, L_B = X.path_lengths(cfg, 0.0)
    assert L_A == L_B == pytest.approx(math.sqrt(400 + 1e-6), rel=1e-15)


def test_excess_is_additive():
    cfg = geometry(extra_long_path=1e-6)
    L_A, L_B = X.path_lengths(cfg, 0.0)
    assert L_A - L_B == pytest.approx(1e-6, abs=1e-15)
    assert X.path_difference(cfg, 0.0) == 1e-6


def test_paraxial_path_difference():
    cfg = geometry()
    L_A, L_B = X.path_lengths(cfg, 1e-3)
    exact = math.hypot(1.0, 1e-3 - 5e-5) - math.hypot(1.0, 1e-3 + 5e-5)
    assert (L_A - L_B) == pytest.approx(-1e-7, rel=0.01)
    assert X.path_difference(cfg, 1e-3) == pytest.approx(exact, rel=1e-9)


def test_synchrony(photon):
    assert X.synchrony_mismatch(photon, 0.0) == pytest.approx(0.0, abs=1e-24)
    assert X.synchrony_mismatch(geometry(), 0.0) == 0.0
    x = 0.01
    geometric = X.path_difference(photon, x) - photon.extra_long_path
    expect = geometric / photon.v_group
    assert X.synchrony_mismatch(photon, x) == pytest.approx(expect, rel=1e-6)


def test_overlap_values():
    s = 1e-12
    assert X.envelope_overlap(s, 0.0) == 1.0
    assert X.envelope_overlap(s, 20 * s) < 1e-10
    assert X.envelope_overlap(s, 2 * s) == pytest.approx(math.exp(-1), abs=1e-6)


@pytest.mark.parametrize("ratio", [0.0, 0.3, 1.0, 2.0, 3.7, 6.0])
def test_overlap_matches_quadrature(ratio):
    s = 2e-11
    assert X.envelope_overlap(s, ratio * s) == pytest.approx(quad_overlap(ratio * s, s), abs=1e-9)
    assert X.envelope_overlap(s, ratio * s) == pytest.approx(math.exp(-ratio**2 / 4), abs=1e-12)


def test_overlap_monotone():
    d = np.linspace(0, 10, 200) * 1e-12
    g = X.envelope_overlap(1e-12, d)
    assert np.all(np.diff(g) <= 0)
    np.testing.assert_allclose(g, X.envelope_overlap(1e-12, -d), rtol=1e-14)


def test_config_rules(photon):
    with pytest.raises(ConfigurationError, match="pulse-duration rule"):
        dataclasses.replace(photon, pulse_sigma=photon.delta_T / 5)
    with pytest.raises(ConfigurationError, match="paraxial"):
        dataclasses.replace(photon, slit_separation=5.0)
    with pytest.raises(ConfigurationError):
        dataclasses.replace(photon, wavelength=-1.0)


def test_emission_validation():
    with pytest.raises(ConfigurationError):
        X.EmissionModel.coherent(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        X.EmissionModel.incoherent(0.7, 0.7)
    with pytest.raises(ConfigurationError):
        X.EmissionModel.single("C")
    em = X.EmissionModel.coherent_split(0.25, 0.3)
    assert em.weights == pytest.approx((0.25, 0.75))
    assert np.angle(em.cA * np.conj(em.cB)) == pytest.approx(0.3)


def test_coherent_pattern(photon):
    pat = X.intensity_pattern(photon, COHERENT)
    assert X.visibility(pat) > 0.99
    assert X.fringe_spacing(pat) == pytest.approx(photon.fringe_spacing, rel=0.01)
    assert pat.normalization > 0
    assert pat.probabilities.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("em", [X.EmissionModel.single("A"), X.EmissionModel.single("B"),
                                X.EmissionModel.incoherent(0.5, 0.5)])
def test_patterns_without_cross_term_show_no_fringes(photon, em):
    assert X.visibility(X.intensity_pattern(photon, em)) < 0.01


def test_incoherent_is_average_of_single_paths(photon):
    a = X.intensity_pattern(photon, X.EmissionModel.single("A")).intensity
    b = X.intensity_pattern(photon, X.EmissionModel.single("B")).intensity
    mix = X.intensity_pattern(photon, X.EmissionModel.incoherent(0.5, 0.5)).intensity
    assert np.abs(mix - 0.5 * (a + b)).max() < 1e-12 * mix.max()


def test_zeroed_cross_term_equals_incoherent(photon):
    em = X.EmissionModel.coherent_split(0.3, 1.1)
    zeroed = X.intensity_pattern(photon, em, cross_term=False)
    mix = X.intensity_pattern(photon, X.EmissionModel.incoherent(*em.weights))
    np.testing.assert_array_equal(zeroed.intensity, mix.intensity)


def test_unequal_weights_visibility():
    cfg = geometry(screen=make_grid(-0.02, 0.02, 4001, periodic=False))
    pat = X.intensity_pattern(cfg, X.EmissionModel.coherent_split(0.9))
    assert X.visibility(pat) == pytest.approx(0.6, abs=0.02)


def test_visibility_errors(photon):
    pat = X.intensity_pattern(photon, COHERENT)
    with pytest.raises(InsufficientDataError):
        X.visibility(pat, window=photon.fringe_spacing)
    flat = dataclasses.replace(pat, intensity=np.zeros_like(pat.intensity))
    with pytest.raises(InsufficientDataError):
        X.visibility(flat)


@given(u=st.floats(0, 1), phi=st.floats(0, 2 * np.pi),
       shift=st.floats(-5, 5), sigma=st.floats(1e-13, 5e-11),
       kind=st.sampled_from(["coherent", "incoherent", "single:A", "single:B"]))
@settings(max_examples=40, deadline=None)
def test_intensity_non_negative(photon, u, phi, shift, sigma, kind):
    cfg = dataclasses.replace(photon, pulse_sigma=sigma,
                              delta_T=photon.delta_T + shift * sigma)
    if kind == "coherent":
        em = X.EmissionModel.coherent_split(u, phi)
    elif kind == "incoherent":
        em = X.EmissionModel.incoherent(u, 1 - u)
    else:
        em = X.EmissionModel.single(kind[-1])
    pat = X.intensity_pattern(cfg, em)
    assert np.all(pat.intensity >= 0)
    assert 0.0 <= X.visibility(pat) <= 1.0
    expected = 2 * np.sqrt(u * (1 - u)) * X.envelope_overlap(sigma, shift * sigma) \
        if kind == "coherent" else 0.0
    # a_A/a_B differs from 1 by 1.5% in this preset, hence the loose bound
    assert X.visibility(pat) == pytest.approx(expected, abs=0.02)


def test_delta_T_scan_peaks_at_tuned_value(photon):
    s = photon.pulse_sigma
    values = photon.tuned_delta_T + np.linspace(-4, 4, 9) * s
    curve = X.visibility_scan(photon, COHERENT, "delta_T", values)
    assert [v for v, _ in curve] == pytest.approx(list(values))
    vis = np.array([v for _, v in curve])
    assert np.argmax(vis) == 4
    gamma = X.envelope_overlap(s, photon.tuned_delta_T - values)
    np.testing.assert_allclose(vis, gamma, atol=1e-3)


def test_single_path_scan_is_flat(photon):
    values = photon.tuned_delta_T + np.linspace(-3, 3, 7) * photon.pulse_sigma
    curve = X.visibility_scan(photon, X.EmissionModel.single("A"), "delta_T", values)
    assert max(v for _, v in curve) < 0.01


def test_weight_split_scan(electron):
    u = [0, 0.25, 0.5, 0.75, 1]
    curve = X.visibility_scan(electron, COHERENT, "weight_split", u)
    expected = 2 * np.sqrt(np.multiply(u, np.subtract(1, u)))
    np.testing.assert_allclose([v for _, v in curve], expected, atol=0.02)


def test_pulse_sigma_scan_keeps_tuned_visibility(photon):
    curve = X.visibility_scan(photon, COHERENT, "pulse_sigma", [1e-12, 5e-12, 2e-11])
    assert min(v for _, v in curve) > 0.99


def test_scan_is_deterministic_across_workers(photon):
    values = photon.tuned_delta_T + np.linspace(-2, 2, 8) * photon.pulse_sigma
    one = X.visibility_scan(photon, COHERENT, "delta_T", values, workers=1)
    many = X.visibility_scan(photon, COHERENT, "delta_T", values, workers=4)
    assert one == many


def test_scan_rejects_unknown_parameter(photon):
    with pytest.raises(ConfigurationError):
        X.visibility_scan(photon, COHERENT, "wavelength", [1.0])


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("CHRONOSLIT_THREADS", "2")
    assert X.worker_count(16) == 2
    monkeypatch.delenv("CHRONOSLIT_THREADS")
    assert X.worker_count(3) == 3


def test_optical_period_shift_moves_fringes_only(photon):
    period = photon.wavelength / photon.v_phase
    shifted = dataclasses.replace(photon, delta_T=photon.delta_T + 0.5 * period)
    a = X.intensity_pattern(photon, COHERENT)
    b = X.intensity_pattern(shifted, COHERENT)
    assert abs(X.visibility(a) - X.visibility(b)) < 1e-3
    # half a period swaps maxima and minima at the centre
    centre = photon.screen.index_of(0.0)
    assert a.intensity[centre] > a.intensity.mean() > b.intensity[centre]


def test_relative_phase_moves_fringes_only(photon):
    a = X.intensity_pattern(photon, X.EmissionModel.coherent_split(0.5, 0.0))
    b = X.intensity_pattern(photon, X.EmissionModel.coherent_split(0.5, np.pi / 2))
    assert abs(X.visibility(a) - X.visibility(b)) < 1e-3
    assert not np.allclose(a.intensity, b.intensity)


def test_emission_gate(photon):
    assert X.emission_gate(photon, photon.t1) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert X.emission_gate(photon, photon.t1 + photon.delta_T) == pytest.approx((0.0, 1.0),
                                                                               abs=1e-12)
    mid = X.emission_gate(photon, photon.t1 + photon.delta_T / 2)
    assert max(mid) < math.exp(-12.5) * (1 + 1e-9)
