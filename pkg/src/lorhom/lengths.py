"""Length functionals of sampled sphere curves under a conformal factor."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .factor import FactorSpec
from .sphere import SphereCurve, azimuth, polar, slerp, tag_reciprocal

EPS = np.finfo(float).eps
DEFAULT_ORDER = 8


@lru_cache(maxsize=None)
def gauss_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def sqrt_excess(F):
    """sqrt(1 + F) - 1 without cancellation."""
    F = np.asarray(F, dtype=float)
    return F / (np.sqrt(1.0 + F) + 1.0)


def excess_rounding(spec: FactorSpec, x, F, tag=None):
    """Bound on |F| error caused by sample positions being rounded to floats.

    The bump part is bounded through its analytic gradient; dips through a
    relative bound. On a tagged meridian only the polar angle is rounded.
    """
    theta = polar(x)
    err = 8 * EPS * np.abs(F)
    if spec.has_bumps:
        base = replace(spec, variant="base", dips=())
        if tag is None:
            _, Ft, Fp, _, _ = base.excess_derivatives(theta, azimuth(x))
            st = np.maximum(np.sin(theta), 1e-300)
            grad = np.hypot(Ft, Fp / st)
        else:
            ph, sr, cr = tag_reciprocal(tag)
            _, a_t, _ = base.polar_profile(theta)
            full = lambda v: np.full(theta.shape, v)
            b0, _, _ = base.azimuth_profile(full(ph), full(sr), full(cr))
            grad = np.abs(a_t * b0) * spec.scale
        err = err + 4 * EPS * grad
    return err


@dataclass(frozen=True)
class SegmentLengths:
    """Per-segment g0 length, g* - g0 excess and a rounding bound on it."""

    g0: np.ndarray
    excess: np.ndarray
    error: np.ndarray
    dt: np.ndarray
    unit_speed: bool

    @property
    def gstar(self) -> np.ndarray:
        return self.g0 + self.excess

    @property
    def total_excess(self) -> float:
        return math.fsum(self.excess)

    @property
    def total_error(self) -> float:
        return math.fsum(self.error)

    def g0_minus_param(self) -> np.ndarray:
        """g0 length minus parameter step, exactly zero for unit-speed curves."""
        if self.unit_speed:
            return np.zeros_like(self.g0)
        return self.g0 - self.dt


def segment_lengths(spec: FactorSpec, curve: SphereCurve, order: int = DEFAULT_ORDER,
                    with_error: bool = True) -> SegmentLengths:
    key = (spec, order, with_error)
    cache = curve._seg
    if key in cache:
        return cache[key]
    u, w = gauss_nodes(order)
    a = curve.points[:-1]
    b = curve.points[1:]
    gaps = curve.gaps
    dt = np.diff(curve.params)
    g0 = dt.copy() if curve.unit_speed else gaps
    nodes = slerp(a, b, u)  # (T-1, order, 3)
    F = spec.excess(nodes, tag=curve.azimuth_tag)
    ex = gaps * (sqrt_excess(F) @ w)
    if with_error and (spec.has_bumps or spec.dips):
        eF = excess_rounding(spec, nodes, F, curve.azimuth_tag)
        err = gaps * ((eF / (2 * np.sqrt(np.clip(1 + F, 1e-300, None)))) @ w)
        err += 4 * EPS * np.abs(ex)
    else:
        err = 4 * EPS * np.abs(ex)
    out = SegmentLengths(g0, ex, err, dt, curve.unit_speed)
    cache[key] = out
    return out


def length(spec: FactorSpec, curve: SphereCurve, order: int = DEFAULT_ORDER) -> float:
    """g*-length of the great-circle polyline, composite Gauss-Legendre per segment."""
    seg = segment_lengths(spec, curve, order, with_error=False)
    return math.fsum(seg.g0) + seg.total_excess


def length_excess(spec: FactorSpec, curve: SphereCurve, order: int = DEFAULT_ORDER) -> float:
    """L_{g*} - L_{g0}, free of cancellation."""
    return segment_lengths(spec, curve, order, with_error=False).total_excess


def excess_over(spec: FactorSpec, curve: SphereCurve, target: float = math.pi,
                order: int = DEFAULT_ORDER) -> tuple[float, float]:
    """(L_{g*} - target, rounding bound).

    For unit-speed curves the g0 part is the parameter span, exact in the
    model, so sub-ulp excesses over pi survive.
    """
    seg = segment_lengths(spec, curve, order)
    if curve.unit_speed:
        base = (curve.params[-1] - curve.params[0]) - target
        berr = 0.0 if base == 0.0 else 4 * EPS * target
    else:
        base = math.fsum(seg.g0) - target
        berr = 8 * EPS * (len(seg.g0) ** 0.5) * target
    return base + seg.total_excess, berr + seg.total_error


def point_table(spec: FactorSpec, points, tag=None):
    """Columns x, y, z, theta, phi, Omega, Omega - 1 for unit vectors."""
    points = np.asarray(points, dtype=float)
    F = spec.excess(points, tag=tag)
    return np.column_stack([points, polar(points), azimuth(points), 1.0 + F, F])


def write_curve_samples(spec: FactorSpec, curve: SphereCurve, path) -> None:
    table = point_table(spec, curve.points, curve.azimuth_tag)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "theta", "phi", "omega", "omega_minus_1"])
        for t, row in zip(curve.params, table):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
