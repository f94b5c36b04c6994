"""Connected level sets of pinned grid functions and the arcs they force.

If F on a rectangle equals a constant low value on the bottom edge and a
high one on the top edge, every intermediate level set contains a connected
piece touching both side edges. On a grid this becomes: the cells whose
corners straddle the level form an 8-connected cluster from the left column
to the right one. Applied to F = polar angle of a homotopy of N-S curves,
that cluster maps onto the equator and its azimuths sweep a whole arc
between the two boundary curves.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .sphere import azimuth, normalize, polar

PIN_TOL = 1e-9
TWO_PI = 2 * math.pi


class ResolutionError(ValueError):
    """The grid is too coarse for the requested level band."""


@dataclass(frozen=True)
class ScalarGrid:
    """Samples values[i, j] = F(s_i, t_j), pinned to ``low``/``high`` on the t edges."""

    s: np.ndarray
    t: np.ndarray
    values: np.ndarray
    low: float
    high: float
    pin_tol: float = PIN_TOL

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(s), len(t)) or len(s) < 2 or len(t) < 2:
            raise ValueError(f"values shape {v.shape} does not match ({len(s)}, {len(t)})")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("grid coordinates must increase")
        if not self.low < self.high:
            raise ValueError("need low < high")
        if np.max(np.abs(v[:, 0] - self.low)) > self.pin_tol:
            raise ValueError("bottom edge not pinned to the low level")
        if np.max(np.abs(v[:, -1] - self.high)) > self.pin_tol:
            raise ValueError("top edge not pinned to the high level")
        for name, arr in (("s", s), ("t", t), ("values", v)):
            object.__setattr__(self, name, arr)

    @classmethod
    def sample(cls, func, s, t, low, high) -> "ScalarGrid":
        S, T = np.meshgrid(s, t, indexing="ij")
        return cls(s, t, func(S, T), low, high)

    def max_jump(self) -> float:
        v = self.values
        return float(max(np.max(np.abs(np.diff(v, axis=0))), np.max(np.abs(np.diff(v, axis=1)))))


@dataclass
class LevelComponent:
    level: float
    band: float
    cells: np.ndarray = field(repr=False)  # (K, 2) cell indices (i, j), sorted
    connected: bool
    touches_left: bool
    touches_right: bool
    straddling: int

    @property
    def spans(self) -> bool:
        return self.connected and self.touches_left and self.touches_right

    def write_csv(self, path, grid: ScalarGrid) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "s_mid", "t_mid"])
            for i, j in self.cells:
                w.writerow([int(i), int(j), repr(0.5 * float(grid.s[i] + grid.s[i + 1])),
                            repr(0.5 * float(grid.t[j] + grid.t[j + 1]))])


def straddling_cells(grid: ScalarGrid, level: float, band: float) -> np.ndarray:
    v = grid.values
    corners = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
    return (corners.min(axis=0) <= level + band) & (corners.max(axis=0) >= level - band)


def connected_level_component(grid: ScalarGrid, level: float, band: float | None = None) -> LevelComponent:
    """The 8-connected cluster of level cells reaching the s = a column."""
    if not grid.low < level < grid.high:
        raise ValueError("level must lie strictly between the pinned edge values")
    jump = grid.max_jump()
    if band is None:
        band = jump
    if band < 0.5 * jump:
        raise ResolutionError(f"resolution too coarse: band {band:.3g} < half the max jump {jump:.3g}")
    mask = straddling_cells(grid, level, band)
    if not np.all(mask.any(axis=1)):
        raise ResolutionError("resolution too coarse: a grid column has no level cell")
    labels, _ = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    left = set(np.unique(labels[0][labels[0] > 0]))
    right = set(np.unique(labels[-1][labels[-1] > 0]))
    both = sorted(left & right)
    pick = both[0] if both else (min(left) if left else 0)
    cells = np.argwhere(labels == pick) if pick else np.empty((0, 2), dtype=int)
    return LevelComponent(level, band, cells, bool(pick), bool(pick in left), bool(pick in right),
                          int(mask.sum()))


def level_curve_rows(component: LevelComponent, grid: ScalarGrid):
    """Per s-column, the t-range [lo, hi] covered by component cells."""
    out = {}
    for i, j in component.cells:
        lo, hi = grid.t[j], grid.t[j + 1]
        a, b = out.get(int(i), (lo, hi))
        out[int(i)] = (min(a, lo), max(b, hi))
    return out


def _cell_equator_points(points: np.ndarray, cells: np.ndarray):
    """Equator crossings of each cell's image (3-vector model).

    Returns a list of (m, 3) arrays: one crossing per straddling cell edge,
    or the corner nearest the equator when no edge straddles.
    """
    z = points[..., 2]
    out = []
    for i, j in cells:
        found = []
        for (a, b) in (((i, j), (i, j + 1)), ((i + 1, j), (i + 1, j + 1)),
                       ((i, j), (i + 1, j)), ((i, j + 1), (i + 1, j + 1))):
            za, zb = z[a], z[b]
            if za == zb or (za > 0 and zb > 0) or (za < 0 and zb < 0):
                continue
            u = za / (za - zb)
            found.append(normalize((1 - u) * points[a] + u * points[b]))
        if not found:
            corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            found.append(points[min(corners, key=lambda c: abs(z[c]))])
        out.append(np.array(found))
    return out


@dataclass
class ArcCoverage:
    phi_lo: float
    phi_hi: float
    inner_covered: bool       # the arc (phi_lo, phi_hi)
    outer_covered: bool       # its complement through the seam
    lifted_range: tuple
    tolerance: float
    degenerate: bool

    @property
    def inconclusive(self) -> bool:
        return not (self.inner_covered or self.outer_covered)

    @property
    def arc(self) -> str:
        if self.inner_covered:
            return "inner"
        return "outer" if self.outer_covered else "inconclusive"

    def to_dict(self) -> dict:
        return {"phi_lo": self.phi_lo, "phi_hi": self.phi_hi, "arc": self.arc,
                "inner_covered": self.inner_covered, "outer_covered": self.outer_covered,
                "lifted_range": list(self.lifted_range), "tolerance": self.tolerance,
                "degenerate": self.degenerate,
                "note": "coverage holds up to grid resolution at the open arc ends"}


def _covers(lo, hi, a, b, tol):
    """Does [lo, hi] contain a 2 pi-translate of [a, b] up to tol?"""
    m = math.ceil((lo - tol - a) / TWO_PI)
    return a + m * TWO_PI >= lo - tol and b + m * TWO_PI <= hi + tol


def swept_equator_arcs(points: np.ndarray, s, t, phi_lo: float, phi_hi: float,
                       band: float | None = None) -> ArcCoverage:
    """Which equator arc between two N-S boundary curves a homotopy sweeps.

    ``points`` has shape (len(s), len(t), 3): row i is the curve at s_i.
    The azimuth is lifted continuously along the level component, so the
    lifted range is an interval swept without gaps up to the cell size.
    """
    points = np.asarray(points, dtype=float)
    for row in (points[0], points[-1]):
        if row[0, 2] < 1 - 1e-12 or row[-1, 2] > -1 + 1e-12:
            raise ValueError("boundary rows must run from N to S")
    F = polar(points)
    F[:, 0] = 0.0
    F[:, -1] = math.pi
    grid = ScalarGrid(s, t, F, 0.0, math.pi)
    comp = connected_level_component(grid, math.pi / 2, band)
    if phi_lo == phi_hi:
        return ArcCoverage(phi_lo, phi_hi, True, False, (phi_lo, phi_hi), 0.0, True)
    crossings = _cell_equator_points(points, comp.cells)
    az = [azimuth(c) for c in crossings]
    index = {(int(i), int(j)): k for k, (i, j) in enumerate(comp.cells)}
    ref = np.full(len(az), np.nan)
    k0 = next(k for k, (i, _) in enumerate(comp.cells) if i == 0)
    ref[k0] = az[k0][0]
    queue = deque([k0])
    max_step = 0.0
    while queue:
        k = queue.popleft()
        i, j = comp.cells[k]
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                nb = index.get((int(i) + di, int(j) + dj))
                if nb is None or not np.isnan(ref[nb]):
                    continue
                step = _wrap(az[nb][0] - az[k][0])
                max_step = max(max_step, abs(step))
                ref[nb] = ref[k] + step
                queue.append(nb)
    lifted = np.concatenate([ref[k] + _wrap(a - a[0]) for k, a in enumerate(az)])
    lo, hi = float(np.min(lifted)), float(np.max(lifted))
    a, b = sorted((phi_lo, phi_hi))
    exact = 1e-9
    inner = _covers(lo, hi, a, b, exact)
    outer = _covers(lo, hi, b, a + TWO_PI, exact)
    tol = 2 * max_step
    if not (inner or outer):
        # fall back to coverage up to two cells of the lift
        inner = _covers(lo, hi, a, b, tol)
        outer = _covers(lo, hi, b, a + TWO_PI, tol)
    return ArcCoverage(phi_lo, phi_hi, inner, outer, (lo, hi), tol, False)


def _wrap(x):
    return (np.asarray(x) + math.pi) % TWO_PI - math.pi
