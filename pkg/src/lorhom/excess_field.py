"""Pole-anchored distance excess fields.

For a factor with Omega = 1 on both polar caps, the g*-distance from the
north pole is written d*(N, x) = theta(x) + u(x). The excess u solves the
eikonal equation marched in colatitude,

    du/dtheta = sqrt(Omega - (du/dphi / sin theta)^2) - 1,

which is discretised with a Godunov upwind flux in azimuth and SSP-RK3 in
colatitude. Carrying u instead of d* keeps excesses far below the rounding
floor of pi (1e-20 and smaller) representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .factor import FactorSpec, HALF_PI
from .sphere import meridian_azimuth, midpoint_azimuth

PHI_FLOOR = 0.035


def azimuth_grid(spec: FactorSpec, level: int, extra=()):
    """Periodic azimuth nodes on [-pi, pi), refined like |phi|^3 near 0.

    Returns (phi, sinr, cosr); sinr/cosr are finite on nodes placed exactly
    on the flat meridians phi_n, NaN elsewhere.
    """
    scale = 2.0 ** -(level - 6)
    kappa = 0.1 * scale
    hmax = 4e-3 * scale
    hfloor = min(hmax, kappa * PHI_FLOOR ** 3 * 20)
    nodes = [0.0]
    x = 0.0
    while x < math.pi:
        if x < PHI_FLOOR * 0.9:
            h = hfloor
        else:
            h = min(hmax, kappa * max(x, PHI_FLOOR) ** 3)
        x += h
        if x < math.pi - 0.5 * h:
            nodes.append(x)
    pos = np.array(nodes[1:])
    phi = np.unique(np.concatenate([-pos[::-1], [0.0], pos, [-math.pi]]))
    # resolve every dip across its diameter with at least 32 columns
    for d in spec.dips:
        h = d.radius / 16
        if h < float(np.max(np.diff(phi[np.abs(phi - d.center_azimuth) < 2 * d.radius + hmax]))):
            local = d.center_azimuth + h * np.arange(-32, 33)
            phi = phi[np.abs(phi - d.center_azimuth) > 2 * d.radius + h]
            phi = np.unique(np.concatenate([phi, local]))

    tagged = {}
    for n in range(1, spec.max_index + 1):
        tagged[meridian_azimuth(n)] = n
    exact = list(tagged) + [float(v) for v in extra]
    for v in exact:
        k = int(np.argmin(np.abs(phi - v)))
        phi[k] = v
    phi = np.unique(phi)
    sinr = np.full(phi.shape, np.nan)
    cosr = np.full(phi.shape, np.nan)
    for v, n in tagged.items():
        k = int(np.searchsorted(phi, v))
        sinr[k] = 0.0
        cosr[k] = (-1.0) ** n
    return phi, sinr, cosr


@dataclass
class PoleField:
    """Excess u(theta, phi) of the distance from one pole, at snapshot colatitudes."""

    pole: str
    level: int
    phi: np.ndarray
    snapshots: dict
    steps: int

    def at(self, colat: float) -> np.ndarray:
        return self.snapshots[colat]


def _godunov_q2(u, phi):
    h = np.diff(np.concatenate([phi, [phi[0] + 2 * math.pi]]))
    up = np.roll(u, -1)
    pp = (up - u) / h                   # forward slope at i
    pm = np.roll(pp, 1)                 # backward slope at i
    return np.maximum(np.maximum(pm, 0.0) ** 2, np.minimum(pp, 0.0) ** 2), h


def solve_pole_field(spec: FactorSpec, level: int, pole: str = "N", extra=(),
                     snapshots=None, cfl: float = 0.4) -> PoleField:
    if spec.scale != 1.0:
        raise NotImplementedError("pole fields assume Omega = 1 on the polar caps")
    phi, sinr, cosr = azimuth_grid(spec, level, extra)
    lo = HALF_PI - spec.support
    hi = HALF_PI + spec.support
    snaps = sorted(set(snapshots or (HALF_PI, hi)))
    dmax = spec.support / (100 * 2.0 ** (level - 6))

    f2, _, _ = spec.azimuth_profile(phi, sinr, cosr)
    dip_band = max((d.radius for d in spec.dips), default=0.0)
    dip_step = min((d.radius for d in spec.dips), default=1.0) / 16

    def row(colat):
        theta = colat if pole == "N" else math.pi - colat
        f1 = float(spec.polar_profile(theta)[0]) if spec.has_bumps else 0.0
        return f1 * f2 - spec.dip_profile(theta, phi)

    def rate(u, colat, F=None):
        F = row(colat) if F is None else F
        q2, h = _godunov_q2(u, phi)
        a = F - q2 / math.sin(colat) ** 2
        return a / (np.sqrt(np.maximum(1.0 + a, 1e-300)) + 1.0), q2, h, F

    u = np.zeros_like(phi)
    out = {}
    c = lo
    steps = 0
    for target in snaps:
        while c < target:
            k1, q2, h, F = rate(u, c)
            st = math.sin(c)
            slope2 = q2 / st ** 2
            speed = np.sqrt(slope2) / (st * np.sqrt(np.maximum(1.0 + F - slope2, 1e-12)))
            hmin = np.minimum(h, np.roll(h, 1))
            lim = cfl * float(np.min(hmin / np.maximum(speed, 1e-300)))
            dt = min(dmax, lim, target - c)
            if dip_band and abs(c - HALF_PI) < dip_band + dmax:
                dt = min(dt, dip_step)
            u1 = u + dt * k1
            k2 = rate(u1, c + dt)[0]
            u2 = 0.75 * u + 0.25 * (u1 + dt * k2)
            k3 = rate(u2, c + 0.5 * dt)[0]
            u = u / 3.0 + 2.0 / 3.0 * (u2 + dt * k3)
            c = target if target - (c + dt) < 1e-15 else c + dt
            steps += 1
        out[target] = u.copy()
    return PoleField(pole, level, phi, out, steps)


def interp_positive(phi_grid, values, x):
    """Interpolate at x; quadratic in log-space where all three nodes are positive."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    res = np.empty_like(x)
    n = len(phi_grid)
    for m, xv in enumerate(x):
        k = int(np.searchsorted(phi_grid, xv))
        if k < n and phi_grid[k] == xv:
            res[m] = values[k]
            continue
        k = min(max(k, 1), n - 1)
        i0 = k - 1 if k - 1 >= 1 else 1
        idx = np.array([i0 - 1, i0, i0 + 1]) % n
        pts = phi_grid[idx]
        vals = values[idx]
        if np.all(vals > 0):
            c = np.polyfit(pts - xv, np.log(vals), 2)
            res[m] = math.exp(c[-1])
        else:
            res[m] = np.interp(xv, phi_grid, values)
    return res


def log_parabola_peak(x, y, k):
    """Refined maximum of positive samples around index k (log-quadratic fit)."""
    n = len(y)
    if k <= 0 or k >= n - 1 or not (y[k - 1] > 0 and y[k] > 0 and y[k + 1] > 0):
        return float(y[k]), float(x[k])
    xs = x[k - 1:k + 2] - x[k]
    ly = np.log(y[k - 1:k + 2])
    a, b, c = np.polyfit(xs, ly, 2)
    if a >= 0:
        return float(y[k]), float(x[k])
    xv = -b / (2 * a)
    if not (xs[0] <= xv <= xs[2]):
        return float(y[k]), float(x[k])
    return float(math.exp(c - b * b / (4 * a))), float(x[k] + xv)


@dataclass
class ExcessField:
    """North and south pole fields on a shared azimuth grid."""

    spec: FactorSpec
    level: int
    north: PoleField
    south: PoleField

    @property
    def phi(self) -> np.ndarray:
        return self.north.phi

    @property
    def cap_colat(self) -> float:
        return HALF_PI + self.spec.support

    def equator_excess(self) -> np.ndarray:
        """d*(N, p) + d*(p, S) - pi at equator nodes."""
        return self.north.at(HALF_PI) + self.south.at(HALF_PI)

    def equator_excess_at(self, phi) -> np.ndarray:
        return interp_positive(self.phi, self.equator_excess(), phi)

    def pole_distance_excess(self) -> float:
        """d*(N, S) - pi: every N-S path crosses the round cap boundary."""
        return float(np.min(self.north.at(self.cap_colat)))

    def spacing(self, phi: float) -> float:
        k = int(np.argmin(np.abs(self.phi - phi)))
        n = len(self.phi)
        return float(max(self.phi[(k + 1) % n] - self.phi[k],
                         self.phi[k] - self.phi[k - 1]) % (2 * math.pi))


_CACHE: dict = {}


def excess_field(spec: FactorSpec, level: int, extra=()) -> ExcessField:
    pts = tuple(midpoint_azimuth(n) for n in range(1, spec.max_index))
    extra = tuple(sorted(set(float(v) for v in extra) - set(pts)))
    key = (spec, level, extra)
    if key not in _CACHE:
        ex = pts + extra
        north = solve_pole_field(spec, level, "N", ex)
        south = solve_pole_field(spec, level, "S", ex)
        _CACHE[key] = ExcessField(spec, level, north, south)
    return _CACHE[key]


def _arc_excess_over_meridian(a, b_off, dphi):
    """d0((a, phi), (pi - b, phi + dphi)) - (pi - b - a), cancellation-free."""
    A = np.cos((a + b_off) / 2) ** 2
    B = math.sin(a) * math.sin(b_off) * np.sin(dphi / 2) ** 2
    x = np.sqrt(A + B)
    y = np.sqrt(A)
    den = x * np.sqrt(np.maximum(1 - y * y, 0)) + y * np.sqrt(np.maximum(1 - x * x, 0))
    return 2 * np.arcsin(np.where(den > 0, B / np.where(den > 0, den, 1), 0.0))


def cut_deficit(field: ExcessField, meridian_phi: float) -> float:
    """pi - (cut distance) along the meridian from N, from the cap composition.

    Inside the southern cap the metric is round, so
    d*(N, x) = min_y [d*(N, y) + d0(y, x)] over the cap boundary circle y.
    The meridian stays minimising up to the first x where this drops below
    its own length.
    """
    a = field.cap_colat
    u = field.north.at(a)
    k0 = int(np.argmin(np.abs(field.phi - meridian_phi)))
    u_m = u[k0]
    others = np.arange(len(u)) != k0
    u = u[others]
    dphi = field.phi[others] - meridian_phi

    def g(b):
        # best competitor through the cap boundary minus the meridian itself
        return float(np.min(u - u_m + _arc_excess_over_meridian(a, b, dphi)))

    if g(0.0) >= 0.0:
        return 0.0
    hi = math.pi - a
    if g(hi) <= 0:
        return hi
    return float(brentq(g, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=500))
