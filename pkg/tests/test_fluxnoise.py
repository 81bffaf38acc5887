import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kerrcool.fluctuations import linearize, mechanical_response, phonon_occupation
from kerrcool.fluxnoise import (
    AllSamplesUnstable,
    FluxNoiseSpec,
    composite_linewidth_frequency,
    composite_phonon_number,
    composite_spectrum,
    gaussian_weights,
    sigma_from_flux,
)
from kerrcool.model import DriveSpec, hz, reference_device, to_hz
from kerrcool.steady_state import intracavity_roots

DEVICE = reference_device()
G0 = DEVICE.g0


def noiseless(delta, n_in, params=DEVICE):
    drive = DriveSpec(delta, n_in)
    lin = linearize(drive, intracavity_roots(drive, params).roots[0], params)
    return lin, phonon_occupation(lin)


def test_sigma_from_flux():
    assert sigma_from_flux(76.8e-6, 0.38e-6, G0) / G0 == pytest.approx(202.1, abs=0.05)
    assert sigma_from_flux(302e-6, 0.38e-6, G0) / G0 == pytest.approx(795, rel=1e-3)
    assert sigma_from_flux(0.0, 0.38e-6, G0) == 0.0
    with pytest.raises(ValueError):
        sigma_from_flux(1e-6, 0.0, G0)


def test_spec_validation():
    for bad in (dict(sigma=-1.0), dict(sigma=1.0, n_samples=0), dict(sigma=1.0, span=0.0)):
        with pytest.raises(ValueError):
            FluxNoiseSpec(**bad)


def test_zero_sigma_single_sample():
    d, w = gaussian_weights(FluxNoiseSpec(0.0), -1e6)
    assert d.tolist() == [-1e6] and w.tolist() == [1.0]


@given(st.floats(1.0, 1e8), st.integers(1, 400), st.floats(0.1, 5.0), st.floats(-1e8, 1e8))
def test_weights_normalized_and_symmetric(sigma, n, span, d0):
    d, w = gaussian_weights(FluxNoiseSpec(sigma, n, span), d0)
    assert abs(math.fsum(w) - 1.0) <= 1e-12
    assert np.array_equal(w, w[::-1])
    assert np.all(w > 0)


def test_weight_profile():
    d, w = gaussian_weights(FluxNoiseSpec(hz(1e4), 51, 2.0), 0.0)
    assert w[0] / w[25] == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert d[0] == pytest.approx(-2 * hz(1e4)) and d[-1] == pytest.approx(2 * hz(1e4))


def test_zero_sigma_matches_noiseless():
    delta, n_in = hz(-2e6), 5e8
    _, n_ref = noiseless(delta, n_in)
    res = composite_phonon_number(delta, n_in, DEVICE, FluxNoiseSpec(0.0))
    assert res.n_m == n_ref
    trace, _ = composite_spectrum(delta, n_in, DEVICE, FluxNoiseSpec(0.0))
    assert trace.area() == pytest.approx(n_ref, rel=1e-4)


def test_small_sigma_continuity():
    delta, n_in = hz(-2e6), 5e8
    _, n_ref = noiseless(delta, n_in)
    errs = [abs(composite_phonon_number(delta, n_in, DEVICE, FluxNoiseSpec(hz(s))).n_m / n_ref - 1) for s in (1e4, 1e3, 1e2)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_composite_area_equals_weighted_sum():
    trace, res = composite_spectrum(hz(-2e6), 1e9, DEVICE, FluxNoiseSpec(hz(2e5), 21))
    assert trace.area() == pytest.approx(res.n_m, rel=1e-4)


def test_zero_sigma_fit_recovers_single_trace():
    delta, n_in = hz(-2e6), 5e8
    lin, _ = noiseless(delta, n_in)
    resp = mechanical_response(lin)
    f = to_hz(resp.omega_eff) + np.linspace(-5, 5, 4001) * to_hz(resp.gamma_eff)
    trace, _ = composite_spectrum(delta, n_in, DEVICE, FluxNoiseSpec(0.0), freq_hz=f)
    width, center = composite_linewidth_frequency(trace)
    assert width == pytest.approx(to_hz(resp.gamma_eff), rel=0.01)
    assert center == pytest.approx(to_hz(resp.omega_eff), abs=0.01 * to_hz(resp.gamma_eff))


def test_uncoupled_fit_independent_of_sigma():
    p = DEVICE.with_g0(0.0)
    f = to_hz(p.omega_m) + np.linspace(-3, 3, 3001)
    for sigma in (0.0, hz(1e6)):
        trace, _ = composite_spectrum(hz(-1e6), 1e9, p, FluxNoiseSpec(sigma, 11), freq_hz=f)
        width, center = composite_linewidth_frequency(trace)
        assert width == pytest.approx(0.4, rel=1e-3)
        assert center == pytest.approx(to_hz(p.omega_m), abs=1e-3)


def test_strong_noise_broadens():
    p = DEVICE.with_kerr(0.0)
    delta, n_in = hz(-3e6), 1e11
    noise = FluxNoiseSpec(hz(2e5), 15)
    res = composite_phonon_number(delta, n_in, p, noise)
    widths, centers = [], []
    for d in res.detunings:
        resp = mechanical_response(noiseless(d, n_in, p)[0])
        widths.append(to_hz(resp.gamma_eff))
        centers.append(to_hz(resp.omega_eff))
    f = np.linspace(min(centers) - 20 * max(widths), max(centers) + 20 * max(widths), 20001)
    trace, _ = composite_spectrum(delta, n_in, p, noise, freq_hz=f)
    width, _ = composite_linewidth_frequency(trace)
    assert width > max(widths)


def test_unstable_samples_excluded():
    p = DEVICE.with_kerr(0.0).with_g0(hz(3e3))
    res = composite_phonon_number(0.0, 1e10, p, FluxNoiseSpec(hz(2e6), 21))
    assert 0.3 < res.excluded_weight < 0.7
    assert abs(math.fsum(res.weights) - 1.0) < 1e-12
    assert np.all(res.weights[res.detunings > 1e5] == 0)
    with pytest.raises(AllSamplesUnstable):
        composite_phonon_number(hz(2e6), 1e10, p, FluxNoiseSpec(hz(1e5), 5))
