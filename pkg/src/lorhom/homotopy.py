"""Homotopies of N-S curves: obstruction margins, verification, search.

Any fixed-endpoint homotopy between two distinct flat meridians sweeps one
of the two equator arcs between them. A longitudinal curve through an
equator point p has g*-length at least d(N, p) + d(p, S), so the smallest
of the two arc maxima of e(p) = d(N, p) + d(p, S) - pi is a lower bound on
how far some longitudinal curve must exceed pi. When that margin is
positive, no homotopy keeps every curve causal.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .excess_field import excess_field, log_parabola_peak
from .factor import FactorSpec
from .lengths import EPS, excess_over, segment_lengths
from .level_degree import ArcCoverage, swept_equator_arcs
from .sphere import (NORTH, SOUTH, SphereCurve, azimuth, from_angles, meridian_azimuth, normalize,
                     polar, tag_reciprocal)
from .spacetime import classify

OBSTRUCTED, NOT_OBSTRUCTED, INCONCLUSIVE = "obstructed", "not obstructed", "inconclusive"


# grids ---------------------------------------------------------------------

@dataclass
class HomotopyGrid:
    """points[i, k] = H(s_i, t_k); every row runs from N to S."""

    s: np.ndarray
    t: np.ndarray
    points: np.ndarray = field(repr=False)
    tags: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.shape != (len(self.s), len(self.t), 3):
            raise ValueError("points must have shape (len(s), len(t), 3)")
        if np.any(np.diff(self.s) <= 0) or np.any(np.diff(self.t) <= 0):
            raise ValueError("grid parameters must increase")
        if np.max(np.abs(np.linalg.norm(self.points, axis=-1) - 1)) > 1e-12:
            raise ValueError("points must be unit vectors")
        if (np.max(np.abs(self.points[:, 0] - NORTH)) > 1e-12
                or np.max(np.abs(self.points[:, -1] - SOUTH)) > 1e-12):
            raise ValueError("every row must run from N to S")
        if not self.tags:
            self.tags = [None] * len(self.s)

    def row(self, i: int) -> SphereCurve:
        tag = self.tags[i]
        return SphereCurve(self.t, self.points[i], azimuth_tag=tag, unit_speed=tag is not None)

    def between(self, i: int, u: float) -> SphereCurve:
        """Row interpolated between rows i and i+1.

        Two meridian rows are joined through the meridians in between;
        otherwise points are blended on the 3-vector model.
        """
        a, b = self.tags[i], self.tags[i + 1]
        if a is not None and b is not None:
            pa, pb = tag_reciprocal(a)[0], tag_reciprocal(b)[0]
            step = (pb - pa + math.pi) % (2 * math.pi) - math.pi
            phi = pa + u * step
            phi = phi if abs(phi) < math.pi else (phi + math.pi) % (2 * math.pi) - math.pi
            return SphereCurve(self.t, _meridian_points(self.t, phi),
                               azimuth_tag=("value", float(phi)), unit_speed=True)
        pts = normalize((1 - u) * self.points[i] + u * self.points[i + 1])
        pts[0], pts[-1] = NORTH, SOUTH
        return SphereCurve(self.t, pts)

    def boundary_azimuths(self):
        out = []
        for i in (0, -1):
            row = self.points[i]
            off = np.hypot(row[:, 0], row[:, 1]) > 1e-9
            az = azimuth(row[off])
            # a meridian row: constant azimuth, polar angle equal to the parameter
            if np.ptp(az) > 1e-9 or np.max(np.abs(polar(row) - self.t)) > 1e-9:
                raise ValueError("malformed grid: boundary row is not a meridian lift")
            out.append(float(az[0]))
        return tuple(out)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "x", "y", "z"])
            for i, s in enumerate(self.s):
                for k, t in enumerate(self.t):
                    w.writerow([repr(float(s)), repr(float(t)), *(repr(float(v)) for v in self.points[i, k])])


def _azimuth_tag(phi: float, search: int = 64):
    if phi > 0:
        n = round(1.0 / (phi * math.pi))
        if 1 <= n <= search and meridian_azimuth(n) == phi:
            return ("index", n)
    return ("value", phi)


def _meridian_points(t, phi):
    pts = from_angles(t, np.full_like(t, phi))
    pts[0], pts[-1] = NORTH, SOUTH
    return pts


def rotation_homotopy(phi_a: float, phi_b: float, n_s: int = 64, n_t: int = 256,
                      long_way: bool = False, indices=(None, None)) -> HomotopyGrid:
    """Meridians with azimuth moving linearly from phi_a to phi_b.

    ``long_way`` goes around through the seam instead of across the short arc.
    """
    s = np.linspace(0.0, 1.0, n_s + 1)
    t = np.linspace(0.0, math.pi, n_t + 1)
    delta = phi_b - phi_a
    if long_way:
        delta -= math.copysign(2 * math.pi, delta) if delta else 2 * math.pi
    az = phi_a + s * delta
    az[-1] = phi_b
    az = np.where(np.abs(az) < math.pi, az, (az + math.pi) % (2 * math.pi) - math.pi)
    points = np.stack([_meridian_points(t, a) for a in az])
    tags = [_azimuth_tag(float(a)) for a in az]
    for pos, n in zip((0, -1), indices):
        if n is not None:
            tags[pos] = ("index", int(n))
    return HomotopyGrid(s, t, points, tags)


def meridian_homotopy(i: int, j: int, n_s: int = 64, n_t: int = 256, long_way: bool = False) -> HomotopyGrid:
    return rotation_homotopy(meridian_azimuth(i), meridian_azimuth(j), n_s, n_t, long_way, (i, j))


def perturb_homotopy(H: HomotopyGrid, rng: np.random.Generator, amplitude: float = 0.02,
                     modes: int = 3) -> HomotopyGrid:
    """Smooth random tangent displacement vanishing on boundary rows and endpoints."""
    S, T = np.meshgrid(H.s, H.t, indexing="ij")
    theta = polar(H.points)
    phi = azimuth(H.points)
    d_theta = np.zeros_like(S)
    d_phi = np.zeros_like(S)
    for a in range(1, modes + 1):
        for b in range(1, modes + 1):
            c1, c2 = rng.normal(size=2) / (a * b)
            d_theta += c1 * np.sin(a * math.pi * S) * np.sin(b * T)
            d_phi += c2 * np.sin(a * math.pi * S) * np.sin(b * T)
    pts = from_angles(theta + amplitude * d_theta, phi + amplitude * d_phi)
    pts[:, 0], pts[:, -1] = NORTH, SOUTH
    pts[0], pts[-1] = H.points[0], H.points[-1]
    tags = [H.tags[0]] + [None] * (len(H.s) - 2) + [H.tags[-1]]
    return HomotopyGrid(H.s, H.t, pts, tags)


# certificates ----------------------------------------------------------------

@dataclass
class ArcMaximum:
    arc: str
    azimuth: float
    excess: float
    coarse_excess: float
    error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ObstructionCertificate:
    i: int
    j: int
    factor: FactorSpec
    levels: tuple
    arcs: list
    margin: float
    error: float
    verdict: str

    def to_dict(self) -> dict:
        return {"indices": [self.i, self.j], "factor": self.factor.to_dict(),
                "levels": list(self.levels), "arcs": [a.to_dict() for a in self.arcs],
                "margin": self.margin, "error": self.error, "verdict": self.verdict}


def margin_verdict(margin: float, error: float) -> str:
    if margin > error:
        return OBSTRUCTED
    if margin + error <= 0:
        return NOT_OBSTRUCTED
    return INCONCLUSIVE


def _arc_masks(phi, spec: FactorSpec, lo: float, hi: float):
    """Masks of the open arcs (lo, hi) and its complement, minus one cell around each phi_n."""
    inner = (phi > lo) & (phi < hi)
    outer = ~inner & (phi != lo) & (phi != hi)
    keep = np.ones(len(phi), dtype=bool)
    for v in list(spec.meridians) + [lo, hi]:
        k = int(np.argmin(np.abs(phi - v)))
        keep[[k - 1, k, (k + 1) % len(phi)]] = False
    return inner & keep, outer & keep


def arc_maxima(spec: FactorSpec, i: int, j: int, level: int):
    lo, hi = sorted((meridian_azimuth(i), meridian_azimuth(j)))
    field_ = excess_field(spec, level)
    phi = field_.phi
    e = field_.equator_excess()
    out = {}
    for name, mask in zip(("inner", "outer"), _arc_masks(phi, spec, lo, hi)):
        if not np.any(mask):
            out[name] = (0.0, float("nan"))
            continue
        k = int(np.flatnonzero(mask)[np.argmax(e[mask])])
        val, where = log_parabola_peak(phi, e, k)
        out[name] = (val, where)
    return out


def obstruction_margin(factor: FactorSpec, i: int, j: int, levels=(6, 7)) -> ObstructionCertificate:
    """Certify (or not) that meridians i and j admit no causal homotopy."""
    if not 1 <= i < j <= factor.max_index:
        raise ValueError(f"need 1 <= i < j <= {factor.max_index}")
    coarse, fine = (arc_maxima(factor, i, j, lv) for lv in levels)
    arcs = []
    for name in ("inner", "outer"):
        val, where = fine[name]
        cval = coarse[name][0]
        arcs.append(ArcMaximum(name, where, val, cval, abs(val - cval) + 8 * EPS * abs(val)))
    margin = min(a.excess for a in arcs)
    cmargin = min(a.coarse_excess for a in arcs)
    error = abs(margin - cmargin) + 8 * EPS * abs(margin)
    return ObstructionCertificate(i, j, factor, tuple(levels), arcs, margin, error,
                                  margin_verdict(margin, error))


# verification ------------------------------------------------------------------

@dataclass
class HomotopyVerification:
    row_excess: np.ndarray = field(repr=False)
    row_error: np.ndarray = field(repr=False)
    violations: list
    first_violation: int | None
    max_excess: float
    max_excess_s: float
    coverage: ArcCoverage | None
    alarm: bool

    def to_dict(self) -> dict:
        return {"violations": len(self.violations), "first_violation": self.first_violation,
                "max_excess": self.max_excess, "max_excess_s": self.max_excess_s,
                "coverage": None if self.coverage is None else self.coverage.to_dict(),
                "alarm": self.alarm}


def _refine_between(spec, H, i, iters=40):
    """Max excess over interpolated rows between rows i and i+1 (golden section)."""
    g = (math.sqrt(5) - 1) / 2
    f = lambda u: excess_over(spec, H.between(i, u))[0]
    a, b = 0.0, 1.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (fc, c) if fc > fd else (fd, d)


def verify_causal_homotopy(factor: FactorSpec, H: HomotopyGrid, tol: float = 0.0,
                           refine: bool = True) -> HomotopyVerification:
    """Check every longitudinal curve against L_{g*} <= pi (projection model)."""
    phi_a, phi_b = H.boundary_azimuths()
    ex = np.empty(len(H.s))
    er = np.empty(len(H.s))
    for k in range(len(H.s)):
        ex[k], er[k] = excess_over(factor, H.row(k))
    bad = [int(k) for k in np.flatnonzero(ex > er + tol)]
    k = int(np.argmax(ex))
    best, best_s = float(ex[k]), float(H.s[k])
    if refine and len(H.s) > 1:
        for nb in (k - 1, k):
            if 0 <= nb < len(H.s) - 1:
                val, u = _refine_between(factor, H, nb)
                if val > best:
                    best, best_s = float(val), float(H.s[nb] + u * (H.s[nb + 1] - H.s[nb]))
    lo, hi = sorted((phi_a, phi_b))
    coverage = swept_equator_arcs(H.points, H.s, H.t, lo, hi)
    distinct = phi_a != phi_b
    alarm = distinct and factor.has_bumps and not bad
    return HomotopyVerification(ex, er, bad, bad[0] if bad else None, best, best_s, coverage, alarm)


def row_lengths_csv(path, H: HomotopyGrid, verification: HomotopyVerification) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "length_minus_pi", "error"])
        for s, e, r in zip(H.s, verification.row_excess, verification.row_error):
            w.writerow([repr(float(s)), repr(float(e)), repr(float(r))])


# adversarial search ---------------------------------------------------------------

@dataclass
class SearchResult:
    grid: HomotopyGrid
    residual: float
    initial_residual: float
    iterations: int
    accepted: int
    history: list = field(repr=False)

    def to_dict(self) -> dict:
        return {"residual": self.residual, "initial_residual": self.initial_residual,
                "iterations": self.iterations, "accepted": self.accepted,
                "note": "iterations exhausted"}


class _RowModel:
    """Rows theta = t + sum d_k sin(k t), phi = phi0(s) + sum c_k sin(k t)."""

    def __init__(self, spec, phi_a, phi_b, n_s, n_t, modes, tags, sub_spacing):
        self.spec = spec
        self.band = None
        self.s = np.linspace(0.0, 1.0, n_s + 1)
        self.t = np.linspace(0.0, math.pi, n_t + 1)
        self.base = phi_a + self.s * (phi_b - phi_a)
        self.coef = np.zeros((n_s + 1, 2, modes))
        self.basis = np.sin(np.outer(np.arange(1, modes + 1), self.t))
        # rows only differ in length where Omega != 1
        self.band = np.abs(self.t - math.pi / 2) < spec.support + 0.1
        self.tags = tags
        self.sub_spacing = sub_spacing
        self.points = np.stack([self.row_points(i) for i in range(n_s + 1)])
        self.row_ex = np.array([self.row_excess(i) for i in range(n_s + 1)])
        self.gap_ex = np.array([self.gap_excess(i) for i in range(n_s)])

    def row_points(self, i, coef=None):
        c = self.coef[i] if coef is None else coef
        th = self.t + c[0] @ self.basis
        ph = self.base[i] + c[1] @ self.basis
        pts = from_angles(th, ph)
        pts[0], pts[-1] = NORTH, SOUTH
        return pts

    def curve(self, i, pts):
        if not np.any(self.coef[i]):
            tag = self.tags[i] if i in (0, len(self.s) - 1) else ("value", float(self.base[i]))
            return SphereCurve(self.t, pts, azimuth_tag=tag, unit_speed=True)
        return SphereCurve(self.t, pts)

    def _excess(self, curve):
        seg = segment_lengths(self.spec, curve, with_error=False)
        if curve.unit_speed:
            return seg.total_excess
        return (math.fsum(seg.g0) - math.pi) + seg.total_excess

    def row_excess(self, i, pts=None):
        pts = self.points[i] if pts is None else pts
        return self._excess(self.curve(i, pts))

    def gap_excess(self, i, a=None, b=None):
        a = self.points[i] if a is None else a
        b = self.points[i + 1] if b is None else b
        gap = float(np.max(np.linalg.norm(a[self.band] - b[self.band], axis=-1)))
        m = int(min(32, max(1, math.ceil(gap / self.sub_spacing))))
        best = -math.inf
        for q in range(1, m + 1):
            u = q / (m + 1)
            pts = normalize((1 - u) * a + u * b)
            pts[0], pts[-1] = NORTH, SOUTH
            best = max(best, self._excess(SphereCurve(self.t, pts)))
        return best

    def residual(self, row_ex=None, gap_ex=None):
        r = self.row_ex if row_ex is None else row_ex
        g = self.gap_ex if gap_ex is None else gap_ex
        return max(0.0, float(np.max(r)), float(np.max(g)) if len(g) else 0.0)

    def roughness(self, coef=None):
        c = self.coef if coef is None else coef
        return float(np.sum(np.diff(c, axis=0) ** 2))


def attempt_causal_homotopy(factor: FactorSpec, i: int, j: int, iterations: int = 5000,
                            seed: int = 0, n_s: int = 64, n_t: int = 256, modes: int = 4,
                            smoothness: float = 1e-3, step: float = 1e-3,
                            temperature: float = 1e-2) -> SearchResult:
    """Stochastic descent on interior rows to push every row length below pi.

    The residual is max(0, max_s L(row_s) - pi) over grid rows and over
    interpolated rows between them, so rows cannot jump across the arc.
    Each proposal perturbs the shape coefficients of one row (the worst row
    or a random one); the step size adapts to the acceptance rate and worse
    proposals are accepted with an annealed probability. ``smoothness`` and
    ``temperature`` are relative to the current residual.
    """
    rng = np.random.default_rng(seed)
    phi_a, phi_b = meridian_azimuth(i), meridian_azimuth(j)
    tags = {0: ("index", i), n_s: ("index", j)}
    model = _RowModel(factor, phi_a, phi_b, n_s, n_t, modes, tags,
                      sub_spacing=max(abs(phi_b - phi_a) / n_s, 1e-3))
    current = model.residual()
    initial = current
    best = (current, model.points.copy())
    history = [current]
    if n_s < 2 or current == 0.0:
        grid = HomotopyGrid(model.s, model.t, model.points, _row_tags(model))
        return SearchResult(grid, current, initial, 0, 0, history)
    scale = current
    objective = current + smoothness * scale * model.roughness()
    sigma = step
    accepted = 0
    decay = np.arange(1, modes + 1)
    for it in range(iterations):
        frac = it / iterations
        combined = np.maximum(model.row_ex[:-1], model.gap_ex)
        r = int(np.argmax(combined)) if rng.random() < 0.5 else int(rng.integers(1, n_s))
        r = min(max(r + int(rng.integers(0, 2)), 1), n_s - 1)
        old = model.coef[r].copy()
        model.coef[r] = old + sigma * rng.normal(size=old.shape) / decay
        pts = model.row_points(r)
        try:
            rex = model.row_excess(r, pts)
            g_lo = model.gap_excess(r - 1, model.points[r - 1], pts)
            g_hi = model.gap_excess(r, pts, model.points[r + 1])
        except ValueError:
            model.coef[r] = old
            sigma *= 0.9
            continue
        row_ex = model.row_ex.copy()
        gap_ex = model.gap_ex.copy()
        row_ex[r], gap_ex[r - 1], gap_ex[r] = rex, g_lo, g_hi
        res = model.residual(row_ex, gap_ex)
        obj = res + smoothness * scale * model.roughness()
        heat = temperature * scale * (1 - frac)
        if obj <= objective or rng.random() < math.exp(-(obj - objective) / heat):
            model.points[r] = pts
            model.row_ex, model.gap_ex = row_ex, gap_ex
            objective, current = obj, res
            accepted += 1
            sigma = min(sigma * 1.5, 0.1)
            if res < best[0]:
                best = (res, model.points.copy())
        else:
            model.coef[r] = old
            sigma = max(sigma * 0.9, 1e-9)
        if (it + 1) % 100 == 0:
            history.append(current)
    grid = HomotopyGrid(model.s, model.t, best[1])
    return SearchResult(grid, best[0], initial, iterations, accepted, history)


def _row_tags(model) -> list:
    last = len(model.s) - 1
    return [model.tags[k] if k in (0, last) else _azimuth_tag(float(model.base[k]))
            for k in range(last + 1)]


# topology and limits ---------------------------------------------------------------

def topological_homotopy(i: int, j: int, n_s: int = 64, n_t: int = 256) -> HomotopyGrid:
    """Azimuth rotation between meridians i and j: continuous, fixed endpoints."""
    if i == j:
        raise ValueError("need two distinct meridians")
    return meridian_homotopy(i, j, n_s, n_t)


@dataclass
class LimitReport:
    distances: list
    decreasing: bool
    limit_verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def limit_curve_check(sequence, limit) -> LimitReport:
    """Sup-distances of a curve sequence to a candidate C0 limit."""
    ref = limit.space
    dists = []
    for c in sequence:
        if len(c.t) != len(limit.t) or np.any(c.t != limit.t):
            raise ValueError("curves must share the parameter samples")
        dots = np.clip(np.sum(c.space.points * ref.points, axis=-1), -1, 1)
        cross = np.linalg.norm(np.cross(c.space.points, ref.points), axis=-1)
        dists.append(float(np.max(np.arctan2(cross, dots))))
    decreasing = all(b <= a for a, b in zip(dists, dists[1:]))
    return LimitReport(dists, decreasing, classify(limit).verdict)
