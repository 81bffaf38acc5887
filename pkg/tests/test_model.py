import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from kerrcool.model import (
    CavityParams,
    ParameterError,
    hz,
    photon_flux,
    reference_device,
    thermal_occupation,
    to_hz,
    validate,
)
from oracles import bose

F_M = hz(274.41e3)


def test_thermal_occupation_100mk():
    # frozen from the Bose-Einstein oracle
    assert thermal_occupation(0.1, F_M) == pytest.approx(7592.7433779538505, rel=1e-12)
    assert thermal_occupation(0.1, F_M) == pytest.approx(bose(0.1, F_M), rel=1e-9)


def test_thermal_occupation_40mk_near_quoted_2800():
    n = thermal_occupation(0.04, F_M)
    assert n == pytest.approx(3036.7973742283457, rel=1e-12)
    assert abs(n / 2800 - 1) < 0.1


def test_thermal_occupation_unit_at_ln2():
    from kerrcool.model import HBAR, K_B

    omega = 1e6
    temperature = HBAR * omega / (K_B * math.log(2.0))
    assert thermal_occupation(temperature, omega) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("t,w", [(0.0, 1.0), (-1.0, 1.0), (0.1, 0.0), (0.1, -5.0)])
def test_thermal_occupation_domain(t, w):
    with pytest.raises(ParameterError):
        thermal_occupation(t, w)


@given(st.floats(1e-3, 10.0), st.floats(1e3, 1e10), st.floats(1.01, 3.0))
def test_thermal_occupation_monotone(t, w, factor):
    n = thermal_occupation(t, w)
    assert thermal_occupation(t, w * factor) < n
    assert thermal_occupation(t * factor, w) > n


def test_unit_round_trip():
    assert to_hz(hz(3.5e6)) == pytest.approx(3.5e6, rel=1e-15)
    assert hz(1.0) == pytest.approx(2 * math.pi)


def test_reference_device_valid():
    assert validate(reference_device()) == []


def test_validate_reports_kappa_and_thermal():
    p = reference_device()
    bad = replace(p, cavity=replace(p.cavity, kappa=0.0))
    assert [v.field for v in validate(bad)] == ["cavity.kappa"]
    bad = p.with_thermal(-1.0)
    assert [v.field for v in validate(bad)] == ["mech.n_thermal"]


def test_validate_collects_all():
    p = reference_device()
    bad = replace(p, cavity=CavityParams(omega_c=-1.0, kappa=-1.0)).with_thermal(-1.0)
    assert {v.field for v in validate(bad)} >= {"cavity.omega_c", "cavity.kappa", "mech.n_thermal"}


def test_photon_flux():
    omega = hz(8.176e9)
    from kerrcool.model import HBAR

    assert photon_flux(-30.0, 0.0, omega) == pytest.approx(1e-6 / (HBAR * omega))
    assert photon_flux(-30.0, 10.0, omega) == pytest.approx(0.1 * photon_flux(-30.0, 0.0, omega))
