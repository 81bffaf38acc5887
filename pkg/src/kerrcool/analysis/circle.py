"""Notch-type resonator fit in the complex plane.

Model of the measured transmission:

    S21(f) = a exp(i alpha) exp(-2 pi i f tau) [1 - (Ql/|Qc|) exp(i phi0) / (1 + 2i Ql (f - fc)/fc)]

The fit runs in stages: cable delay, algebraic circle fit, phase-vs-frequency
fit of the centred circle, then recovery of the environment and coupling
parameters. A final least-squares pass over all seven parameters polishes
the result against the complex data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from ..model import TWO_PI


class CircleFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class CircleFitResult:
    a: float
    alpha_env: float
    tau: float
    omega_c: float
    phi_0: float
    q_loaded: float
    q_coupling_abs: float
    residual_rms: float

    @property
    def q_internal(self) -> float:
        """1/Qi = 1/Ql - Re(1/Qc), with complex Qc = |Qc| exp(-i phi0)."""
        inv = 1.0 / self.q_loaded - math.cos(self.phi_0) / self.q_coupling_abs
        return 1.0 / inv if inv > 0 else math.inf

    @property
    def f_c(self) -> float:
        return self.omega_c / TWO_PI


def notch_s21(freq_hz, f_c: float, q_loaded: float, q_coupling_abs: float, phi_0: float):
    """Environment-free notch response."""
    freq_hz = np.asarray(freq_hz, dtype=float)
    return 1.0 - (q_loaded / q_coupling_abs) * np.exp(1j * phi_0) / (
        1.0 + 2j * q_loaded * (freq_hz - f_c) / f_c
    )


def s21_full(freq_hz, a, alpha_env, tau, f_c, phi_0, q_loaded, q_coupling_abs):
    freq_hz = np.asarray(freq_hz, dtype=float)
    env = a * np.exp(1j * alpha_env) * np.exp(-1j * TWO_PI * freq_hz * tau)
    return env * notch_s21(freq_hz, f_c, q_loaded, q_coupling_abs, phi_0)


def internal_q(q_loaded: float, q_coupling: float) -> float:
    """Plain quality-factor identity 1/Ql = 1/Qc + 1/Qi."""
    return 1.0 / (1.0 / q_loaded - 1.0 / q_coupling)


def fit_circle(z: np.ndarray) -> tuple[complex, float]:
    """Algebraic circle fit (Pratt-type constraint); returns centre and radius."""
    x, y = z.real, z.imag
    zz = x * x + y * y
    # normalise to keep the moment matrix well conditioned
    scale = np.sqrt(np.mean(zz))
    x, y, zz = x / scale, y / scale, zz / scale**2
    m = np.column_stack([zz, x, y, np.ones_like(x)])
    moments = m.T @ m / len(x)
    constraint = np.array(
        [[0, 0, 0, -2.0], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [-2.0, 0, 0, 0]]
    )
    evals, evecs = np.linalg.eig(np.linalg.solve(constraint, moments))
    evals = evals.real
    # smallest non-negative eigenvalue gives the best circle
    cand = [i for i in np.argsort(evals) if evals[i] > -1e-12]
    if not cand:
        raise CircleFitError("circle fit failed: no admissible eigenvector")
    A, B, C, D = evecs[:, cand[0]].real
    if A == 0:
        raise CircleFitError("circle fit degenerate (points on a line)")
    xc, yc = -B / (2 * A), -C / (2 * A)
    r = math.sqrt(max(B * B + C * C - 4 * A * D, 0.0)) / (2 * abs(A))
    return complex(xc, yc) * scale, r * scale


def _circle_residual(z: np.ndarray) -> float:
    # absolute, not relative to r: a relative measure prefers the large delay arc
    c, r = fit_circle(z)
    return float(np.sum((np.abs(z - c) - r) ** 2))


def _phase_fit(freq, theta, f_guess, ql_guess):
    def model(p):
        theta0, ql, fr = p
        return theta0 + 2.0 * np.arctan(2.0 * ql * (1.0 - freq / fr))

    def resid(p):
        d = theta - model(p)
        return np.angle(np.exp(1j * d))

    theta0_guess = float(np.angle(np.mean(np.exp(1j * theta))))
    best = None
    for t0 in (theta0_guess, theta0_guess + math.pi / 2, theta0_guess - math.pi / 2):
        res = least_squares(resid, [t0, ql_guess, f_guess], x_scale=[1.0, ql_guess, f_guess / ql_guess])
        if best is None or res.cost < best.cost:
            best = res
    return best.x


def circle_fit(freq_hz, s21, refine: bool = True) -> CircleFitResult:
    """Fit the seven-parameter notch model to complex transmission data."""
    f = np.asarray(freq_hz, dtype=float)
    z = np.asarray(s21, dtype=complex)
    if f.shape != z.shape or f.size < 10:
        raise CircleFitError("need at least 10 matched frequency/S21 samples")
    order = np.argsort(f)
    f, z = f[order], z[order]

    # 1. cable delay: coarse slope from the off-resonant ends, then minimize circle residual
    n_edge = max(3, f.size // 10)
    idx = np.r_[0:n_edge, f.size - n_edge : f.size]
    phase = np.unwrap(np.angle(z))
    slope = np.polyfit(f[idx], phase[idx], 1)[0]
    tau0 = -slope / TWO_PI
    span = f[-1] - f[0]
    # the edge slope is biased by the resonance tails by a fraction of a radian
    # across the span; search only that neighbourhood so the large delay arc
    # itself is never mistaken for the resonance circle
    width = 0.6 / (TWO_PI * span)
    grid = tau0 + np.linspace(-width, width, 41)
    cost = [_circle_residual(z * np.exp(1j * TWO_PI * f * t)) for t in grid]
    k = int(np.argmin(cost))
    step = grid[1] - grid[0]
    res = minimize_scalar(
        lambda t: _circle_residual(z * np.exp(1j * TWO_PI * f * t)),
        bounds=(grid[k] - step, grid[k] + step),
        method="bounded",
        options={"xatol": 1e-6 * step},
    )
    tau = float(res.x)
    z1 = z * np.exp(1j * TWO_PI * f * tau)

    # 2. circle and 3. phase of the centred circle
    centre, radius = fit_circle(z1)
    if radius < 3.0 * np.std(np.abs(z1 - centre) - radius) or radius == 0:
        raise CircleFitError("no resonance circle resolved above the noise")
    theta = np.unwrap(np.angle(z1 - centre))
    dist = np.abs(z1 - np.mean(z1[idx]))
    f_guess = float(f[np.argmax(dist)])
    fwhm_guess = max(span / 10.0, f[1] - f[0])
    theta0, ql, fr = _phase_fit(f, theta, f_guess, f_guess / fwhm_guess)
    ql = abs(ql)

    # 4. environment from the off-resonant point, 5. normalized circle
    off = centre + radius * np.exp(1j * (theta0 + math.pi))
    a = abs(off)
    alpha_env = float(np.angle(off))
    c_norm = centre / off
    r_norm = radius / a
    phi0 = -math.asin(max(-1.0, min(1.0, c_norm.imag / r_norm)))
    qc = ql / (2.0 * r_norm)

    p0 = np.array([a, alpha_env, tau, fr, phi0, ql, qc])
    if refine:
        p0 = _refine(f, z, p0)
    a, alpha_env, tau, fr, phi0, ql, qc = p0
    model = s21_full(f, *p0)
    rms = float(np.sqrt(np.mean(np.abs(model - z) ** 2)))
    if not f[0] < fr < f[-1] or not ql > 0 or abs(a) * ql / qc < 5.0 * rms:
        raise CircleFitError("no resonance resolved: circle is lost in the noise or outside the span")
    alpha_env = float(np.angle(np.exp(1j * alpha_env)))
    return CircleFitResult(
        a=float(a),
        alpha_env=alpha_env,
        tau=float(tau),
        omega_c=TWO_PI * float(fr),
        phi_0=float(phi0),
        q_loaded=float(ql),
        q_coupling_abs=float(qc),
        residual_rms=rms,
    )


def _refine(f, z, p0):
    f0 = p0[3]
    scale = np.array([p0[0], 1.0, 1.0 / (f[-1] - f[0]), f0 / p0[5], 1.0, p0[5], p0[6]])

    def resid(u):
        p = u * scale
        d = s21_full(f, *p) - z
        return np.concatenate([d.real, d.imag])

    res = least_squares(resid, p0 / scale, method="lm", xtol=1e-14, ftol=1e-14)
    return res.x * scale


def cavity_slopes(result: CircleFitResult, omega_p: float) -> tuple[float, float, complex]:
    """Magnitude and phase slopes (per rad/s) of the normalized response at ``omega_p``.

    Returns (alpha, beta, S21) of the environment-free transmission.
    """
    f_c, ql, qc, phi0 = result.f_c, result.q_loaded, result.q_coupling_abs, result.phi_0

    def s(w):
        return complex(notch_s21(w / TWO_PI, f_c, ql, qc, phi0))

    # analytic derivative of the notch response with respect to angular frequency
    u = 1.0 + 2j * ql * (omega_p / TWO_PI - f_c) / f_c
    ds = (ql / qc) * np.exp(1j * phi0) * (2j * ql / (TWO_PI * f_c)) / u**2
    s0 = s(omega_p)
    mag = abs(s0)
    if mag == 0:
        raise ValueError("|S21| vanishes at the pump frequency")
    alpha = (s0.conjugate() * ds).real / mag
    beta = (ds / s0).imag
    return float(alpha), float(beta), s0
