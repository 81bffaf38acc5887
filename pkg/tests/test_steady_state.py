import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrcool.model import DriveSpec, hz, reference_device, to_hz
from kerrcool.steady_state import (
    NoBistability,
    bistability_threshold,
    cubic_residual,
    effective_kerr,
    intracavity_roots,
    select_branch,
    steady_displacement,
    sweep,
)
from oracles import count_roots_bruteforce

DEVICE = reference_device()
KAPPA = DEVICE.kappa


def test_effective_kerr_without_coupling():
    p = DEVICE.with_g0(0.0)
    assert effective_kerr(p) == p.kerr


def test_effective_kerr_device_correction():
    k_eff = to_hz(effective_kerr(DEVICE))
    assert k_eff == pytest.approx(-12200.294457199081, rel=1e-12)
    assert k_eff - to_hz(DEVICE.kerr) == pytest.approx(-0.2945, abs=1e-3)


def test_effective_kerr_negative_for_linear_cavity():
    assert effective_kerr(DEVICE.with_kerr(0.0)) < 0


def test_threshold_device():
    assert bistability_threshold(DEVICE) == pytest.approx(1214126008.1777933, rel=1e-12)
    assert bistability_threshold(DEVICE) == pytest.approx(1.21e9, rel=5e-3)


def test_threshold_linear_cavity_raises():
    with pytest.raises(NoBistability):
        bistability_threshold(DEVICE.with_kerr(0.0).with_g0(0.0))


def test_linear_cavity_on_resonance():
    p = DEVICE.with_kerr(0.0).with_g0(0.0)
    st_ = intracavity_roots(DriveSpec(0.0, 1e9), p)
    assert st_.roots == pytest.approx((4e9 / KAPPA,), rel=1e-14)


@given(st.floats(-3.0, 3.0), st.floats(1e3, 1e14))
def test_linear_cavity_closed_form(d, n_in):
    p = DEVICE.with_kerr(0.0).with_g0(0.0)
    delta = d * KAPPA
    st_ = intracavity_roots(DriveSpec(delta, n_in), p)
    assert st_.roots == pytest.approx((KAPPA * n_in / (delta**2 + KAPPA**2 / 4),), rel=1e-13)


def test_undriven():
    st_ = intracavity_roots(DriveSpec(-1e6, 0.0), DEVICE)
    assert st_.roots == (0.0,)


def test_three_roots_inside_window_only():
    n_in = 3.0 * bistability_threshold(DEVICE)
    k_eff = effective_kerr(DEVICE)
    counts = []
    for d in np.linspace(-6, 2, 33) * KAPPA:
        st_ = intracavity_roots(DriveSpec(d, n_in), DEVICE)
        n_max = 1.5 * 4 * n_in / KAPPA
        counts.append(len(st_.roots))
        assert len(st_.roots) == count_roots_bruteforce(d, n_in, KAPPA, k_eff, n_max)
        if len(st_.roots) == 3:
            assert st_.stable == (True, False, True)
    counts = np.array(counts)
    inside = np.nonzero(counts == 3)[0]
    assert inside.size > 0
    assert np.all(counts[inside[0] : inside[-1] + 1] == 3)
    assert set(counts) == {1, 3}


@settings(max_examples=300)
@given(
    st.floats(-5.0, 5.0),
    st.floats(1e-4, 50.0),
    st.floats(-3e4, 3e4).filter(lambda k: abs(k) > 1.0),
)
def test_root_residuals(d, load, kerr_hz):
    p = DEVICE.with_kerr(hz(kerr_hz)).with_g0(0.0)
    n_in = load * bistability_threshold(p)
    st_ = intracavity_roots(DriveSpec(d * KAPPA, n_in), p)
    for n in st_.roots:
        assert abs(cubic_residual(n, d * KAPPA, n_in, KAPPA, st_.k_eff)) <= 1e-10 * KAPPA * n_in
    assert list(st_.roots) == sorted(st_.roots)


def test_select_branch_policies():
    n_in = 3.0 * bistability_threshold(DEVICE)
    d = -2.0 * KAPPA
    st_ = intracavity_roots(DriveSpec(d, n_in), DEVICE)
    assert len(st_.roots) == 3
    assert select_branch(st_, "lowest").n_c == st_.roots[0]
    assert select_branch(st_, "highest").n_c == st_.roots[2]
    with pytest.raises(ValueError):
        select_branch(st_, "middle")


def test_sweep_hysteresis():
    n_in = 3.0 * bistability_threshold(DEVICE)
    grid = np.linspace(-6, 2, 161) * KAPPA
    red = np.array([s.n_c for s in sweep(grid, n_in, DEVICE, "sweep-from-red")])
    blue = np.array([s.n_c for s in sweep(grid, n_in, DEVICE, "sweep-from-blue")])
    assert np.any(np.abs(red - blue) > 0.1 * np.maximum(red, blue))
    # selected branches stay on stable roots
    for s in sweep(grid, n_in, DEVICE, "sweep-from-red"):
        assert s.stable[s.selected]


def test_steady_displacement():
    assert steady_displacement(0.0, DEVICE) == 0.0
    assert steady_displacement(200.0, DEVICE) == pytest.approx(2 * steady_displacement(100.0, DEVICE))
    p = DEVICE.with_kerr(0.0)
    from dataclasses import replace

    p0 = replace(p, mech=replace(p.mech, gamma_m=0.0))
    assert steady_displacement(50.0, p0) == pytest.approx(-math.sqrt(2) * p.g0 * 50.0 / p.omega_m, rel=1e-15)
