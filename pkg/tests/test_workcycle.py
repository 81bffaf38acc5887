import math

import numpy as np
import pytest

from kerrcool import workcycle
from kerrcool.fluctuations import linearize, mechanical_response
from kerrcool.model import DriveSpec, hz, reference_device
from kerrcool.steady_state import intracavity_roots
from kerrcool.workcycle import damping_from_work, integrate_cavity, loop_area, work_per_cycle

LINEAR = reference_device(kerr_hz=0.0)


def optical_damping(drive, params):
    n_c = intracavity_roots(drive, params).roots[0]
    return mechanical_response(linearize(drive, n_c, params)).gamma_opt


def test_uncoupled_cavity_is_static():
    p = reference_device().with_g0(0.0)
    drive = DriveSpec(hz(-2e6), 5e8)
    traj = integrate_cavity(drive, p, n_m_coherent=100.0, n_cycles=1)
    n_ref = intracavity_roots(drive, p).roots[0]
    assert np.max(np.abs(traj.n_c / n_ref - 1)) < 1e-8


def test_undriven_stays_empty():
    traj = integrate_cavity(DriveSpec(hz(-1e6), 0.0), LINEAR, n_m_coherent=100.0, n_cycles=1, alpha0=0.0)
    assert np.all(traj.alpha == 0)


def test_resonant_drive_does_no_work():
    traj = integrate_cavity(DriveSpec(0.0, 1e10), LINEAR, n_m_coherent=100.0)
    w = work_per_cycle(traj, LINEAR)
    ref = work_per_cycle(integrate_cavity(DriveSpec(hz(-1e6), 1e10), LINEAR, 100.0), LINEAR)
    assert abs(w.work) < 1e-6 * abs(ref.work)


@pytest.mark.parametrize("delta_hz", [-3e6, -1e6, 1e6, 3e6])
def test_work_sign_follows_detuning(delta_hz):
    traj = integrate_cavity(DriveSpec(hz(delta_hz), 1e10), LINEAR, n_m_coherent=100.0)
    w = work_per_cycle(traj, LINEAR)
    assert w.periodic
    assert np.sign(w.work) == np.sign(delta_hz)


def test_zero_work_zero_damping():
    assert damping_from_work(0.0, 10.0, LINEAR) == 0.0


@pytest.mark.parametrize("delta_hz", [-4e6, -1.5e6, -0.3e6])
def test_energy_balance_matches_self_energy(delta_hz):
    drive = DriveSpec(hz(delta_hz), 1e10)
    w = work_per_cycle(integrate_cavity(drive, LINEAR, 100.0), LINEAR)
    gamma = damping_from_work(w.work, 100.0, LINEAR)
    assert gamma == pytest.approx(optical_damping(drive, LINEAR), rel=0.05)


def test_damping_amplitude_independent():
    drive = DriveSpec(hz(-1.8e6), 1e10)
    g = [
        damping_from_work(work_per_cycle(integrate_cavity(drive, LINEAR, n), LINEAR).work, n, LINEAR)
        for n in (100.0, 25.0)
    ]
    assert g[0] == pytest.approx(g[1], rel=0.02)


def test_rk4_order(monkeypatch):
    p = reference_device()
    drive = DriveSpec(hz(-2e6), 5e8)

    def run(steps):
        monkeypatch.setattr(workcycle, "STEPS_PER_SCALE", steps)
        traj = integrate_cavity(drive, p, 1e6, n_cycles=1, settle_cycles=1)
        return traj.alpha[-1]

    ref = run(800)
    e1, e2 = abs(run(25) - ref), abs(run(50) - ref)
    assert e1 / e2 > 10.0  # fourth order gives 16


def test_loop_orientation_flips():
    a_red = loop_area(integrate_cavity(DriveSpec(hz(-1e6), 1e10), LINEAR, 100.0), LINEAR)
    a_blue = loop_area(integrate_cavity(DriveSpec(hz(1e6), 1e10), LINEAR, 100.0), LINEAR)
    assert np.sign(a_red) == -np.sign(a_blue) != 0
