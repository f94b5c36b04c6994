"""Curvature, geodesics and conjugate points of Omega g0."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .excess_field import cut_deficit, excess_field
from .factor import FactorSpec
from .sphere import normalize, polar, azimuth

FD_STEP = 1e-3
# 4th-order central stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.arange(-2, 3)


def _log_factor(spec: FactorSpec, theta, phi):
    return np.log1p(spec.excess_angles(theta, phi))


def log_factor_derivatives(spec: FactorSpec, theta, phi, h: float = FD_STEP, analytic: bool = True):
    """(l_t, l_p, l_tt, l_pp) for l = log Omega at angle coordinates."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if analytic and not spec.dips:
        F, Ft, Fp, Ftt, Fpp = spec.excess_derivatives(theta, phi)
        w = 1.0 + F
        return Ft / w, Fp / w, Ftt / w - (Ft / w) ** 2, Fpp / w - (Fp / w) ** 2
    th = theta[..., None] + h * _OFF
    ph = phi[..., None] + h * _OFF
    lt = _log_factor(spec, th, phi[..., None])
    lp = _log_factor(spec, theta[..., None], ph)
    return (lt @ _D1 / h, lp @ _D1 / h, lt @ _D2 / h ** 2, lp @ _D2 / h ** 2)


def gaussian_curvature(spec: FactorSpec, p, analytic: bool = True, h: float = FD_STEP) -> float:
    """K = (1 - Laplacian0(log Omega) / 2) / Omega."""
    x = np.asarray(getattr(p, "position", p), dtype=float)
    theta, phi = float(polar(x)), float(azimuth(x))
    st = math.sin(theta)
    if st < 1e-6:
        # the caps are round: Omega = scale there
        return 1.0 / spec.scale
    lt, lp, ltt, lpp = log_factor_derivatives(spec, theta, phi, h, analytic)
    lap = ltt + math.cos(theta) / st * lt + lpp / st ** 2
    omega = 1.0 + float(spec.excess_angles(theta, phi))
    return float((1.0 - 0.5 * lap) / omega)


def _frame(theta, phi):
    e_t = np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
    e_p = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return e_t, e_p


def half_log_gradient(spec: FactorSpec, x) -> np.ndarray:
    """Round-metric gradient of w = log(Omega)/2 as a tangent 3-vector."""
    theta, phi = float(polar(x)), float(azimuth(x))
    st = math.sin(theta)
    if st < 1e-6 or abs(theta - math.pi / 2) >= spec.support + 2 * FD_STEP:
        return np.zeros(3)
    lt, lp, _, _ = log_factor_derivatives(spec, theta, phi)
    e_t, e_p = _frame(theta, phi)
    return 0.5 * (float(lt) * e_t + float(lp) / st * e_p)


def meridian_residual(spec: FactorSpec, meridian_phi: float, samples: int = 512) -> float:
    """Max g*-geodesic curvature of the meridian (normal derivative of w)."""
    lo = math.pi / 2 - spec.support
    theta = np.linspace(lo, math.pi - lo, samples)
    _, lp, _, _ = log_factor_derivatives(spec, theta, np.full_like(theta, meridian_phi))
    return float(np.max(np.abs(0.5 * lp / np.sin(theta) / np.sqrt(1.0 + spec.excess_angles(theta, meridian_phi)))))


def conjugate_point(spec: FactorSpec, start, direction, max_length: float = 2 * math.pi,
                    rtol: float = 1e-10, atol: float = 1e-12):
    """g*-arclength to the first conjugate point, or None before ``max_length``."""
    x0 = normalize(np.asarray(getattr(start, "position", start), dtype=float))
    d = np.asarray(direction, dtype=float)
    d = d - np.dot(d, x0) * x0
    nd = np.linalg.norm(d)
    if nd == 0:
        raise ValueError("direction must be tangent and nonzero")
    w0 = 0.5 * math.log1p(float(spec.excess(x0)))
    v0 = d / nd * math.exp(-w0)

    def rhs(_, y):
        x, v, J, dJ = y[:3], y[3:6], y[6], y[7]
        grad = half_log_gradient(spec, x)
        vv = v @ v
        acc = -vv * x - 2.0 * (grad @ v) * v + vv * grad
        K = gaussian_curvature(spec, x)
        return np.concatenate([v, acc, [dJ, -K * J]])

    def crossing(_, y):
        return y[6]

    crossing.terminal = True
    crossing.direction = -1
    y0 = np.concatenate([x0, v0, [0.0, 1.0]])
    sol = solve_ivp(rhs, (0.0, max_length), y0, method="RK45", rtol=rtol, atol=atol,
                    events=crossing, first_step=1e-4)
    if sol.status == -1:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    hits = [t for t in sol.t_events[0] if t > 1e-6]
    return float(hits[0]) if hits else None


@dataclass
class CutPoint:
    """Cut distance along a meridian from N; ``deficit`` = pi - distance, kept exactly."""

    azimuth: float
    distance: float
    deficit: float
    error: float
    level: int
    residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cut_point(spec: FactorSpec, meridian_phi: float = 0.0, levels=(6, 7),
              residual_tol: float = 1e-6) -> CutPoint:
    """Last point up to which the meridian from N stays minimising."""
    res = meridian_residual(spec, meridian_phi)
    if not res <= residual_tol:
        raise ValueError(f"meridian at {meridian_phi} is not a geodesic (residual {res:.3g})")
    coarse, fine = (cut_deficit(excess_field(spec, lv, extra=(meridian_phi,)), meridian_phi)
                    for lv in levels)
    # dips are resolved at a fixed sub-grid, so both levels can agree exactly
    error = abs(fine - coarse) + 8 * np.finfo(float).eps * fine
    return CutPoint(meridian_phi, math.pi - fine, fine, error, levels[-1], res)
