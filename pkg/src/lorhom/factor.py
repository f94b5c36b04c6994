"""Conformal factors Omega on the sphere and their validation.

Every evaluation returns the *excess* Omega - 1 rather than Omega itself.
For the flat-meridian factor the excess between neighbouring meridians
drops below 1e-20 already at phi ~ 0.15, far under the rounding floor of
1 + x, so lengths, speeds and distances are all carried as excesses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from .sphere import azimuth, meridian_azimuth, polar, tag_reciprocal, angle_distance

HALF_PI = math.pi / 2
VARIANTS = ("unit", "base", "modified")


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1. Returns (S, S', S'')."""
    x = np.asarray(x, dtype=float)
    s = np.where(x >= 1.0, 1.0, 0.0)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        xi = x[inside]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            z = 1.0 / (1.0 - xi) - 1.0 / xi
            zp = 1.0 / (1.0 - xi) ** 2 + 1.0 / xi ** 2
            zpp = 2.0 / (1.0 - xi) ** 3 - 2.0 / xi ** 3
            sig = expit(z)
            w = expit(z) * expit(-z)
            s[inside] = sig
            d1[inside] = np.nan_to_num(w * zp)
            d2[inside] = np.nan_to_num(w * ((1.0 - 2.0 * sig) * zp ** 2 + zpp))
    return s, d1, d2


def log_smooth_step(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 0.0, -np.inf)
    inside = (x > 0.0) & (x < 1.0)
    if np.any(inside):
        xi = x[inside]
        z = 1.0 / (1.0 - xi) - 1.0 / xi
        out[inside] = -np.logaddexp(0.0, -z)
    return out


@dataclass(frozen=True)
class Dip:
    """Smooth depression of depth ``depth`` on the g0-ball of diameter
    ``diameter`` centred on the equator at the n-th meridian."""

    index: int
    diameter: float
    depth: float

    @property
    def center_azimuth(self) -> float:
        return meridian_azimuth(self.index)

    @property
    def radius(self) -> float:
        return self.diameter / 2


@dataclass(frozen=True)
class FactorSpec:
    variant: str = "base"
    plateau: float = 0.3
    support: float = 0.6
    cutoff_plateau: float = HALF_PI
    cutoff_support: float = 3 * math.pi / 4
    max_index: int = 8
    dips: tuple = field(default_factory=tuple)
    scale: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown factor variant {self.variant!r}")
        if not 0 < self.plateau < self.support < HALF_PI:
            raise ValueError("need 0 < plateau < support < pi/2")
        if not 0 < self.cutoff_plateau < self.cutoff_support < math.pi:
            raise ValueError("need 0 < cutoff plateau < cutoff support < pi")
        if self.cutoff_plateau < HALF_PI:
            raise ValueError("azimuth cutoff must keep the closed form on (-pi/2, pi/2)")
        if self.max_index < 1:
            raise ValueError("max_index must be positive")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        dips = tuple(d if isinstance(d, Dip) else Dip(**d) for d in self.dips)
        object.__setattr__(self, "dips", dips)
        if self.variant != "modified" and dips:
            raise ValueError("only the modified variant carries dips")
        for d in dips:
            if not (1 <= d.index <= self.max_index and d.diameter > 0 and 0 < d.depth < 1):
                raise ValueError(f"invalid dip {d}")

    # constructors -------------------------------------------------------
    @classmethod
    def unit(cls, **kw) -> "FactorSpec":
        return cls(variant="unit", **kw)

    @classmethod
    def base(cls, **kw) -> "FactorSpec":
        return cls(variant="base", **kw)

    def with_dips(self, dips) -> "FactorSpec":
        kw = asdict(self)
        kw.update(variant="modified", dips=tuple(dips))
        return FactorSpec(**kw)

    def scaled(self, c: float) -> "FactorSpec":
        kw = asdict(self)
        kw.update(scale=self.scale * c, dips=self.dips)
        return FactorSpec(**kw)

    @property
    def meridians(self) -> np.ndarray:
        return np.array([meridian_azimuth(n) for n in range(1, self.max_index + 1)])

    @property
    def has_bumps(self) -> bool:
        return self.variant != "unit"

    # closed-form pieces -------------------------------------------------
    def polar_profile(self, theta):
        """f1 and its first two theta-derivatives."""
        theta = np.asarray(theta, dtype=float)
        dist = np.abs(theta - HALF_PI)
        width = self.support - self.plateau
        s, s1, s2 = smooth_step((self.support - dist) / width)
        sign = np.sign(theta - HALF_PI)
        return s, -sign * s1 / width, s2 / width ** 2

    def azimuth_profile(self, phi, sinr=None, cosr=None):
        """f2 and its first two phi-derivatives.

        ``sinr``/``cosr`` override sin(1/phi), cos(1/phi) where finite; used
        on tagged meridians so that f2 vanishes exactly at phi_n.
        """
        phi = np.asarray(phi, dtype=float)
        shape = phi.shape
        if sinr is not None:
            sinr = np.broadcast_to(np.asarray(sinr, dtype=float), shape).ravel()
            cosr = np.broadcast_to(np.asarray(cosr, dtype=float), shape).ravel()
        phi = phi.ravel()
        f, d1, d2 = self._azimuth_profile_flat(phi, sinr, cosr)
        return f.reshape(shape), d1.reshape(shape), d2.reshape(shape)

    def _azimuth_profile_flat(self, phi, sinr, cosr):
        f = np.zeros_like(phi)
        d1 = np.zeros_like(phi)
        d2 = np.zeros_like(phi)
        live = (phi != 0.0) & (np.abs(phi) < self.cutoff_support)
        if not np.any(live):
            return f, d1, d2
        p = phi[live]
        with np.errstate(under="ignore", over="ignore", divide="ignore"):
            g = np.exp(-1.0 / p ** 2)
        keep = g > 0
        if not np.any(keep):
            return f, d1, d2
        idx = np.flatnonzero(live)[keep]
        p = p[keep]
        g = g[keep]
        a = 1.0 / p
        sr = np.sin(a)
        cr = np.cos(a)
        if sinr is not None:
            so = sinr[idx]
            co = cosr[idx]
            ok = np.isfinite(so)
            sr = np.where(ok, so, sr)
            cr = np.where(ok, co, cr)
        g1 = g * 2.0 / p ** 3
        g2 = g * (4.0 / p ** 6 - 6.0 / p ** 4)
        s0 = sr * sr
        s1 = -2.0 * sr * cr / p ** 2
        s2 = 2.0 * (cr * cr - sr * sr) / p ** 4 + 4.0 * sr * cr / p ** 3
        h0 = g * s0
        h1 = g1 * s0 + g * s1
        h2 = g2 * s0 + 2.0 * g1 * s1 + g * s2
        width = self.cutoff_support - self.cutoff_plateau
        c0, c1, c2 = smooth_step((self.cutoff_support - np.abs(p)) / width)
        sign = np.sign(p)
        c1 = -sign * c1 / width
        c2 = c2 / width ** 2
        f[idx] = h0 * c0
        d1[idx] = h1 * c0 + h0 * c1
        d2[idx] = h2 * c0 + 2.0 * h1 * c1 + h0 * c2
        return f, d1, d2

    def log_bump(self, theta, phi):
        """log(f1 f2) for the base bump; -inf where it vanishes exactly."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if not self.has_bumps:
            return np.full(np.broadcast(theta, phi).shape, -np.inf)
        width = self.support - self.plateau
        lf1 = log_smooth_step((self.support - np.abs(theta - HALF_PI)) / width)
        cw = self.cutoff_support - self.cutoff_plateau
        with np.errstate(divide="ignore"):
            lchi = log_smooth_step((self.cutoff_support - np.abs(phi)) / cw)
            safe = np.where(phi == 0.0, 1.0, phi)
            lf2 = -1.0 / safe ** 2 + 2.0 * np.log(np.abs(np.sin(1.0 / safe))) + lchi
        lf2 = np.where(phi == 0.0, -np.inf, lf2)
        return lf1 + lf2

    def dip_profile(self, theta, phi):
        """Sum of the dip functions f >= 0 (zero unless modified)."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(np.broadcast(theta, phi).shape)
        if not self.dips:
            return out
        th, ph = np.broadcast_arrays(theta, phi)
        for d in self.dips:
            c = d.center_azimuth
            near = (np.abs(th - HALF_PI) < d.radius) & (np.abs(ph - c) < 2 * d.radius + 1e-3)
            if not np.any(near):
                continue
            r = angle_distance(th[near], ph[near], HALF_PI, c) / d.radius
            s, _, _ = smooth_step(r)
            out[near] += d.depth * (1.0 - s)
        return out

    # public evaluation ---------------------------------------------------
    def excess_angles(self, theta, phi, sinr=None, cosr=None):
        """Omega - 1 at angle coordinates."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        shape = np.broadcast(theta, phi).shape
        if self.has_bumps:
            f1, _, _ = self.polar_profile(theta)
            f1 = np.broadcast_to(f1, shape)
            bump = np.zeros(shape)
            band = f1 > 0
            if np.any(band):
                ph = np.broadcast_to(phi, shape)[band]
                sr = None if sinr is None else np.broadcast_to(sinr, shape)[band]
                cr = None if cosr is None else np.broadcast_to(cosr, shape)[band]
                f2, _, _ = self.azimuth_profile(ph, sr, cr)
                bump[band] = f1[band] * f2
        else:
            bump = np.zeros(shape)
        bump = bump - self.dip_profile(theta, phi)
        if self.scale != 1.0:
            return (self.scale - 1.0) + self.scale * bump
        return bump

    def excess(self, x, tag=None):
        """Omega - 1 at 3-vectors ``x`` (..., 3); ``tag`` as on SphereCurve."""
        x = np.asarray(x, dtype=float)
        theta = polar(x)
        rec = tag_reciprocal(tag)
        if rec is None:
            return self.excess_angles(theta, azimuth(x))
        phi, sr, cr = rec
        phi_arr = np.full(theta.shape, phi)
        # poles have no azimuth; the tag only matters off the poles where f1 > 0
        return self.excess_angles(theta, phi_arr, np.full(theta.shape, sr), np.full(theta.shape, cr))

    def evaluate(self, p) -> float:
        x = getattr(p, "position", p)
        return float(1.0 + self.excess(np.asarray(x)))

    def excess_derivatives(self, theta, phi):
        """(F, F_t, F_p, F_tt, F_pp) of F = Omega - 1 for unit/base factors."""
        if self.dips:
            raise NotImplementedError("no closed form for dip derivatives")
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        theta, phi = np.broadcast_arrays(theta, phi)
        if not self.has_bumps:
            z = np.zeros(theta.shape)
            return (z + (self.scale - 1.0), z, z, z, z)
        a0, a1, a2 = self.polar_profile(theta)
        b0, b1, b2 = self.azimuth_profile(phi)
        c = self.scale
        return ((c - 1.0) + c * a0 * b0, c * a1 * b0, c * a0 * b1, c * a2 * b0, c * a0 * b2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dips"] = [asdict(x) for x in self.dips]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FactorSpec":
        d = dict(d)
        d["dips"] = tuple(Dip(**x) for x in d.get("dips", ()))
        return cls(**d)


# validation ---------------------------------------------------------------

VALIDATION_TOL = 1e-9


@dataclass
class ConditionResult:
    name: str
    passed: bool
    worst_theta: float | None = None
    worst_phi: float | None = None
    worst_value: float | None = None
    note: str = ""


@dataclass
class ValidationReport:
    resolution: tuple
    conditions: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"resolution": list(self.resolution),
                "conditions": [asdict(c) for c in self.conditions],
                "passed": self.passed}


def validate_factor(spec: FactorSpec, n_theta: int = 2048, n_phi: int = 4096,
                    tol: float = VALIDATION_TOL, chunk: int = 64) -> ValidationReport:
    """Check conditions (a), (b), (c1), (c2) on a cell-centred angle grid.

    (c2) is a strict inequality whose margin near phi = 0 is below any
    floating tolerance, so it is decided on log(Omega - 1) being finite.
    """
    if n_theta < 256 or n_phi < 512:
        raise ValueError("validation grid must be at least 256 x 512")
    theta = (np.arange(n_theta) + 0.5) * math.pi / n_theta
    phi = -math.pi + (np.arange(n_phi) + 0.5) * 2 * math.pi / n_phi
    dphi = 2 * math.pi / n_phi

    # exclusion bands of one cell around every phi_n = 1/(n pi) (all n)
    n_hi = int(math.ceil(1.0 / (math.pi * dphi))) + 2
    n_all = np.arange(1, max(n_hi, spec.max_index) + 1)
    phin = 1.0 / (n_all * math.pi)
    excluded = np.zeros(n_phi, dtype=bool)
    for v in phin:
        excluded |= np.abs(phi - v) <= dphi
    excluded |= phi <= phin[-1]
    c2_cols = (phi > 0) & (phi < HALF_PI) & ~excluded
    c2_rows = np.abs(theta - HALF_PI) < spec.plateau
    cap_rows = np.abs(theta - HALF_PI) > spec.support

    worst_a = (math.inf, None, None)
    worst_c1 = (0.0, None, None)
    worst_c2 = (math.inf, None, None)
    for i0 in range(0, n_theta, chunk):
        th = theta[i0:i0 + chunk, None]
        F = spec.excess_angles(th, phi[None, :])
        k = np.unravel_index(np.argmin(F), F.shape)
        if F[k] < worst_a[0]:
            worst_a = (float(F[k]), float(th[k[0], 0]), float(phi[k[1]]))
        rows = cap_rows[i0:i0 + chunk]
        if np.any(rows):
            Fc = np.abs(F[rows])
            k = np.unravel_index(np.argmax(Fc), Fc.shape)
            if Fc[k] > worst_c1[0]:
                worst_c1 = (float(Fc[k]), float(th[rows][k[0], 0]), float(phi[k[1]]))
        rows = c2_rows[i0:i0 + chunk]
        if np.any(rows) and np.any(c2_cols):
            thr = th[rows]
            if spec.dips or spec.scale != 1.0:
                with np.errstate(divide="ignore"):
                    L = np.log(np.clip(spec.excess_angles(thr, phi[None, c2_cols]), 0, None))
            else:
                L = spec.log_bump(thr, phi[None, c2_cols])
            k = np.unravel_index(np.argmin(L), L.shape)
            if L[k] < worst_c2[0]:
                worst_c2 = (float(L[k]), float(thr[k[0], 0]), float(phi[c2_cols][k[1]]))

    # (b): along each materialised meridian, on the theta grid
    worst_b = (0.0, None, None)
    for v in spec.meridians:
        F = np.abs(spec.excess_angles(theta, np.full_like(theta, v)))
        k = int(np.argmax(F))
        if F[k] > worst_b[0]:
            worst_b = (float(F[k]), float(theta[k]), float(v))

    conds = [
        ConditionResult("a", worst_a[0] >= -tol, worst_a[1], worst_a[2], worst_a[0],
                        "min of Omega - 1"),
        ConditionResult("b", worst_b[0] <= tol, worst_b[1], worst_b[2], worst_b[0],
                        "max |Omega - 1| on meridians phi_n"),
        ConditionResult("c1", worst_c1[0] <= tol, worst_c1[1], worst_c1[2], worst_c1[0],
                        "max |Omega - 1| on the polar caps"),
        ConditionResult("c2", bool(np.isfinite(worst_c2[0])), worst_c2[1], worst_c2[2],
                        worst_c2[0], "min log(Omega - 1) on the strict band"),
    ]
    return ValidationReport((n_theta, n_phi), conds)
