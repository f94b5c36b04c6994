"""Points and sampled curves on the unit sphere.

All geometry lives in the 3-vector embedding. Polar and azimuth angles are
derived for reporting and for evaluating closed-form factors; interpolation
never does arithmetic on the azimuth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORTH = np.array([0.0, 0.0, 1.0])
SOUTH = np.array([0.0, 0.0, -1.0])
UNIT_TOL = 1e-12
MIN_ANTIPODAL_GAP = 1e-6


def meridian_azimuth(n: int) -> float:
    """Azimuth 1/(n pi) of the n-th flat meridian."""
    return 1.0 / (n * math.pi)


def midpoint_azimuth(n: int) -> float:
    """Azimuth halfway between the n-th and (n+1)-th flat meridians."""
    return (1.0 / n + 1.0 / (n + 1)) / (2 * math.pi)


def from_angles(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def polar(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    rho = np.hypot(x[..., 0], x[..., 1])
    return np.arctan2(rho, x[..., 2])


def azimuth(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.arctan2(x[..., 1], x[..., 0])


def normalize(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def arc(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Round-sphere distance, accurate for tiny and near-antipodal gaps."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def angle_distance(theta1, phi1, theta2, phi2):
    """Haversine distance between points given in angles."""
    dphi = np.asarray(phi2) - np.asarray(phi1)
    dth = np.asarray(theta2) - np.asarray(theta1)
    h = np.sin(dth / 2) ** 2 + np.sin(theta1) * np.sin(theta2) * np.sin(dphi / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def slerp(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Points at fractions ``u`` along the short great-circle arc from a to b.

    ``a``, ``b`` are (..., 3); ``u`` broadcasts against their leading axes and
    gains a trailing node axis: result is (..., len(u), 3).
    """
    a = np.asarray(a, dtype=float)[..., None, :]
    b = np.asarray(b, dtype=float)[..., None, :]
    u = np.asarray(u, dtype=float)[..., None]
    omega = arc(a, b)[..., None]
    small = omega < 1e-9
    so = np.where(small, 1.0, np.sin(omega))
    wa = np.where(small, 1.0 - u, np.sin((1.0 - u) * omega) / so)
    wb = np.where(small, u, np.sin(u * omega) / so)
    return normalize(wa * a + wb * b)


@dataclass(frozen=True)
class SpherePoint:
    position: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.position, dtype=float).reshape(3)
        r = float(np.linalg.norm(x))
        if not r > 0:
            raise ValueError("zero vector is not a sphere point")
        x = x / r
        x.setflags(write=False)
        object.__setattr__(self, "position", x)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "SpherePoint":
        return cls(from_angles(theta, phi))

    @property
    def polar(self) -> float:
        return float(polar(self.position))

    @property
    def azimuth(self) -> float:
        return float(azimuth(self.position))

    @property
    def on_seam(self) -> bool:
        """True on the meridian phi = +-pi, which the angle chart misses."""
        x, y, _ = self.position
        return x < 0 and abs(y) <= 1e-15 and math.hypot(x, y) > 0

    def distance(self, other: "SpherePoint") -> float:
        return float(arc(self.position, other.position))


N = SpherePoint(NORTH)
S = SpherePoint(SOUTH)


def equator_point(phi: float) -> SpherePoint:
    return SpherePoint.from_angles(math.pi / 2, phi)


@dataclass(frozen=True)
class SphereCurve:
    """Sampled curve; consecutive samples are joined by short great-circle arcs.

    ``azimuth_tag`` marks a curve that lies on one meridian whose azimuth is
    known exactly: either ``("index", n)`` for phi_n = 1/(n pi) or
    ``("value", phi)``. Factor evaluation uses the exact azimuth instead of
    the rounded one recovered from the samples. ``unit_speed`` declares the
    parameter to be exact g0-arclength.
    """

    params: np.ndarray
    points: np.ndarray
    azimuth_tag: tuple | None = None
    unit_speed: bool = False
    _seg: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.params, dtype=float)
        x = normalize(np.asarray(self.points, dtype=float))
        if t.ndim != 1 or x.shape != (t.size, 3):
            raise ValueError("params must be (T,) and points (T, 3)")
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("parameters must be strictly increasing")
        gaps = arc(x[:-1], x[1:])
        if np.any(gaps >= math.pi - MIN_ANTIPODAL_GAP):
            raise ValueError("consecutive samples are (nearly) antipodal")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "params", t)
        object.__setattr__(self, "points", x)

    def __len__(self) -> int:
        return self.params.size

    @property
    def gaps(self) -> np.ndarray:
        return arc(self.points[:-1], self.points[1:])

    def theta(self) -> np.ndarray:
        return polar(self.points)

    def phi(self) -> np.ndarray:
        return azimuth(self.points)

    def g0_length(self) -> float:
        return math.fsum(self.gaps)


def meridian(phi: float | None = None, n: int | None = None, samples: int = 2048,
             t0: float = 0.0, t1: float = math.pi) -> SphereCurve:
    """Unit-speed meridian from N (t=0) to S (t=pi), optionally a sub-range."""
    if (phi is None) == (n is None):
        raise ValueError("give exactly one of phi or n")
    if n is not None:
        phi = meridian_azimuth(n)
        tag = ("index", int(n))
    else:
        tag = ("value", float(phi))
    t = np.linspace(t0, t1, samples + 1)
    pts = from_angles(t, np.full_like(t, phi))
    if t0 == 0.0:
        pts[0] = NORTH
    if t1 == math.pi:
        pts[-1] = SOUTH
    return SphereCurve(t, pts, azimuth_tag=tag, unit_speed=True)


def tag_reciprocal(tag) -> tuple[float, float, float] | None:
    """(phi, sin(1/phi), cos(1/phi)) for a tagged meridian, exact at phi_n."""
    if tag is None:
        return None
    kind, val = tag
    if kind == "index":
        n = int(val)
        return meridian_azimuth(n), 0.0, (-1.0) ** n
    phi = float(val)
    if phi == 0.0:
        return 0.0, 0.0, 1.0
    return phi, math.sin(1.0 / phi), math.cos(1.0 / phi)
