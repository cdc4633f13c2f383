"""The tunable splitter itself: closed forms, composition, scans, fits."""

import math

import numpy as np
import pytest

from oracles import align_global_phase
from tbsim.modes import ModeState, Path, apply, global_phase_equal, label
from tbsim.tbs import (FitError, InterferenceQuality, fit_visibility,
                       fringe_points_to_csv, fringe_probability, fringe_scan,
                       reflectivity, tbs_closed_form, tbs_composed,
                       tbs_network_form, transmissivity)


def random_polarizations(n, seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def output_state(alpha, beta, phi):
    st = ModeState.from_dict({("a", "+"): alpha, ("a", "-"): beta})
    return apply(tbs_composed(phi), st)


def test_composed_network_is_unitary_everywhere():
    for phi in np.linspace(0, 2 * math.pi, 17):
        assert tbs_composed(float(phi)).is_unitary(1e-12)


def test_composed_matches_network_closed_form():
    # the element-by-element product and the worked-out closed form of the
    # same network must be one and the same state, not merely one ray
    rng = np.random.default_rng(3)
    for (alpha, beta) in random_polarizations(50, seed=3):
        phi = float(rng.uniform(0, 2 * math.pi))
        out = output_state(alpha, beta, phi)
        ref = tbs_network_form(alpha, beta, phi).to_state()
        assert np.max(np.abs(out.amplitudes - ref.amplitudes)) < 1e-12


def test_closed_form_magnitudes_match_network_form():
    for i, (alpha, beta) in enumerate(random_polarizations(50, seed=11)):
        phi = 2 * math.pi * (i + 0.5) / 50
        a = tbs_closed_form(alpha, beta, phi)
        b = tbs_network_form(alpha, beta, phi)
        for name in ("e_plus", "e_minus", "f_plus", "f_minus"):
            assert abs(abs(getattr(a, name)) - abs(getattr(b, name))) < 1e-12


def test_closed_form_ports_differ_from_network_by_port_local_phases():
    # each output port of the reference closed form matches the composed
    # network up to a phase of that port alone; the two port phases differ
    # by exp(-i*phi) (up to sign), so no single global phase joins them
    alpha, beta = 0.8, 0.6j
    for phi in (0.4, 1.3, 2.2, 4.0, 5.5):
        a = tbs_closed_form(alpha, beta, phi)
        b = tbs_network_form(alpha, beta, phi)
        ratio_e = a.e_plus / b.e_plus
        ratio_f = a.f_plus / b.f_plus
        assert abs(abs(ratio_e) - 1.0) < 1e-12
        assert abs(abs(ratio_f) - 1.0) < 1e-12
        # within a port both polarization components share the phase
        assert abs(a.e_minus - ratio_e * b.e_minus) < 1e-12
        assert abs(a.f_minus - ratio_f * b.f_minus) < 1e-12
        # and across ports the phases disagree by the documented factor
        assert abs(ratio_e / ratio_f - (-np.exp(-1j * phi))) < 1e-12


def test_closed_form_is_not_globally_phase_equal_to_the_network():
    # the documented inconsistency: the branch phases of the reference
    # expression cannot be produced by this (or any) element network
    alpha, beta = 2 ** -0.5, 2 ** -0.5
    for phi in (0.7, 1.9, 3.3):
        x = tbs_closed_form(alpha, beta, phi).to_state()
        y = tbs_network_form(alpha, beta, phi).to_state()
        assert not global_phase_equal(x, y, tol=1e-6)


def test_splitting_law_from_amplitudes():
    phis = np.linspace(0, 2 * math.pi, 101)
    for phi in phis:
        out = tbs_closed_form(1.0, 0.0, float(phi))
        assert abs(out.transmitted_probability() - math.cos(phi / 2) ** 2) < 1e-13
        assert abs(out.reflected_probability() - math.sin(phi / 2) ** 2) < 1e-13


def test_zero_phase_sends_everything_to_port_f():
    out = output_state(0.6, 0.8j, 0.0)
    assert out.path_probability(Path.F) == pytest.approx(1.0, abs=1e-12)
    assert out.path_probability(Path.E) == pytest.approx(0.0, abs=1e-12)


def test_pi_phase_sends_everything_to_port_e():
    out = output_state(1.0, 0.0, math.pi)
    assert out.path_probability(Path.E) == pytest.approx(1.0, abs=1e-12)


def test_internal_paths_are_empty_after_the_interferometer():
    out = output_state(0.6, 0.8, 1.234)
    for p in (Path.A, Path.B, Path.C, Path.D):
        assert out.path_probability(p) < 1e-24


def test_routing_is_polarization_independent():
    phis = np.linspace(0.0, 2 * math.pi, 25)
    pols = [(1.0, 0.0), (0.0, 1.0), (2 ** -0.5, 2 ** -0.5), (2 ** -0.5, -(2 ** -0.5))]
    pols += [tuple(p) for p in random_polarizations(20, seed=99)]
    for phi in phis:
        probs = [output_state(a, b, float(phi)).path_probability(Path.F)
                 for (a, b) in pols]
        assert max(probs) - min(probs) < 1e-12


def test_polarization_rotation_on_the_reflected_port():
    # the reflected branch flips the sign of the "-" component: diagonal
    # input comes out anti-diagonal
    out = tbs_network_form(2 ** -0.5, 2 ** -0.5, math.pi)
    assert abs(out.e_plus - 1j * 2 ** -0.5) < 1e-12
    assert abs(out.e_minus + 1j * 2 ** -0.5) < 1e-12


def test_closed_form_rejects_unnormalized_input():
    with pytest.raises(ValueError):
        tbs_closed_form(1.0, 0.5, 1.0)


def test_fringe_probability_limits():
    perfect = InterferenceQuality(1.0)
    phis = np.linspace(0, 2 * math.pi, 50)
    assert np.allclose(fringe_probability(phis, perfect), np.sin(phis / 2) ** 2)
    v = InterferenceQuality(0.9)
    r = fringe_probability(phis, v)
    assert np.min(r) >= 0.05 - 1e-12 and np.max(r) <= 0.95 + 1e-12


def test_fringe_scan_is_deterministic_and_worker_independent():
    phis = np.linspace(0, 2 * math.pi, 9)
    q = InterferenceQuality(0.95)
    a = fringe_scan(phis, q, 2000, seed=5)
    b = fringe_scan(phis, q, 2000, seed=5)
    c = fringe_scan(phis, q, 2000, seed=5, max_workers=4)
    assert a == b == c
    d = fringe_scan(phis, q, 2000, seed=6)
    assert d != a


def test_fringe_scan_recovers_the_splitting_law():
    phis = np.linspace(0, 2 * math.pi, 9)
    points = fringe_scan(phis, InterferenceQuality(1.0), 20000, seed=8)
    for p in points:
        expected = float(fringe_probability(p.phi_rad, InterferenceQuality(1.0)))
        assert abs(p.r_est - expected) < 5 * max(p.sigma, 1e-4)


def test_fit_visibility_recovers_noiseless_contrast():
    phis = np.linspace(0, 2 * math.pi, 40)
    for v in (0.3, 0.9, 0.959):
        r = 0.5 * (1 - v * np.cos(phis))
        fit = fit_visibility(phis, r)
        assert abs(fit.visibility - v) < 1e-9
        assert abs(fit.phase_offset_rad - math.pi) < 1e-6


def test_fit_visibility_weighted_uncertainty_is_sane():
    rng = np.random.default_rng(123)
    phis = np.linspace(0, 2 * math.pi, 24)
    sigma = 0.004
    r = 0.5 * (1 - 0.9 * np.cos(phis)) + rng.normal(0, sigma, phis.size)
    fit = fit_visibility(phis, r, np.full(phis.size, sigma))
    assert abs(fit.visibility - 0.9) < 5 * fit.uncertainty
    assert 0.0 < fit.uncertainty < 0.05


def test_fit_visibility_error_cases():
    with pytest.raises(FitError):
        fit_visibility([0.0, 1.0, 2.0], [0.1, 0.2, 0.3])  # too few points
    phis = np.linspace(0, 2.0, 10)  # span below pi
    with pytest.raises(FitError):
        fit_visibility(phis, 0.5 * (1 - np.cos(phis)))
    phis = np.linspace(0, 2 * math.pi, 10)
    with pytest.raises(FitError):
        fit_visibility(phis, np.full(10, 0.25))  # constant data


def test_fringe_csv_format():
    points = fringe_scan(np.array([0.0, math.pi]), InterferenceQuality(1.0), 100, seed=1)
    text = fringe_points_to_csv(points)
    lines = text.splitlines()
    assert lines[0] == "phi_rad,T_est,R_est,sigma"
    assert len(lines) == 3
    assert text.endswith("\n")
    # repr round trip keeps every digit
    first = lines[1].split(",")
    assert float(first[0]) == points[0].phi_rad
    assert float(first[1]) == points[0].t_est


def test_transmissivity_reflectivity_sum_to_one():
    for phi in np.linspace(-7, 7, 100):
        assert transmissivity(float(phi)) + reflectivity(float(phi)) == pytest.approx(1.0)


def test_global_phase_alignment_helper_consistency():
    # sanity-check the oracle helper itself on a known global-phase pair
    x = tbs_network_form(0.6, 0.8, 1.0).to_state().amplitudes
    y = (np.exp(0.83j) * x)
    assert align_global_phase(x, y) < 1e-12
