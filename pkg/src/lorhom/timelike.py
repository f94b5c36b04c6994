"""Dip parameters that turn the lightlike meridian lifts timelike.

Each equator midpoint p_n between two flat meridians carries a strict excess
mu_n on a cap U_n of diameter delta_n. Each meridian point q_n gets a dip of
depth nu_n on a cap V_n of diameter eps_n. The dips are small enough that
the saving from crossing one never pays for the detour through a
neighbouring U_m, which is the sufficiency inequality checked below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .excess_field import excess_field
from .factor import Dip, FactorSpec, HALF_PI
from .sphere import SpherePoint, equator_point, meridian_azimuth, midpoint_azimuth

DECREASE = 0.999


def p_point(n: int) -> SpherePoint:
    return equator_point(midpoint_azimuth(n))


def q_point(n: int) -> SpherePoint:
    return equator_point(meridian_azimuth(n))


def sqrt1p_minus1(x: float) -> float:
    return x / (math.sqrt(1.0 + x) + 1.0)


def cap_samples(center_phi: float, radius: float, rings: int = 8, spokes: int = 32):
    """(theta, phi) samples filling the closed g0-cap around an equator point."""
    r = radius * np.arange(1, rings + 1) / rings
    a = 2 * math.pi * np.arange(spokes) / spokes
    rr, aa = np.meshgrid(r, a, indexing="ij")
    # exponential map at (pi/2, c) in the local frame (south, east)
    c = equator_point(center_phi).position
    east = np.array([-math.sin(center_phi), math.cos(center_phi), 0.0])
    south = np.array([0.0, 0.0, -1.0])
    x = (np.cos(rr)[..., None] * c
         + np.sin(rr)[..., None] * (np.cos(aa)[..., None] * south + np.sin(aa)[..., None] * east))
    th = np.arccos(np.clip(x[..., 2], -1, 1)).ravel()
    ph = np.arctan2(x[..., 1], x[..., 0]).ravel()
    return np.concatenate([[HALF_PI], th]), np.concatenate([[center_phi], ph])


def derive_excess(factor: FactorSpec, n: int, bisections: int = 40):
    """(mu_n, delta_n): half the excess at p_n and a cap diameter keeping it."""
    if not 1 <= n <= factor.max_index - 1:
        raise ValueError(f"p_{n} needs meridians n and n+1 <= {factor.max_index}")
    phi = midpoint_azimuth(n)
    peak = float(factor.excess_angles(HALF_PI, phi))
    if not (math.isfinite(peak) and peak > 0):
        raise ValueError(f"no excess at p_{n}: Omega - 1 = {peak}")
    mu = 0.5 * peak

    def holds(r):
        th, ph = cap_samples(phi, r)
        return bool(np.min(factor.excess_angles(th, ph)) > mu)

    hi = (meridian_azimuth(n) - meridian_azimuth(n + 1)) / 4
    if holds(hi):
        return mu, 2 * hi
    lo = 0.0
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ValueError(f"excess at p_{n} does not persist on any sampled cap")
    return mu, 2 * lo


def _adjacent(n: int, count: int):
    # q_n lies between p_{n-1} and p_n; n+1 is included as a safety margin
    return [m for m in (n - 1, n, n + 1) if 1 <= m <= count]


@dataclass(frozen=True)
class TimelikeParamSet:
    """mu, delta indexed by n = 1..N-1 (caps U_n); nu, eps by n = 1..N (dips V_n)."""

    mu: tuple
    delta: tuple
    nu: tuple
    eps: tuple
    enforce: bool = field(default=True, compare=False)

    def __post_init__(self):
        for name in ("mu", "delta", "nu", "eps"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if len(self.nu) != len(self.eps) or len(self.mu) != len(self.delta):
            raise ValueError("mismatched parameter lengths")
        if len(self.mu) != len(self.nu) - 1:
            raise ValueError("need one excess cap fewer than dips")
        if self.enforce:
            bad = self.violations()
            if bad:
                raise ValueError("invalid parameter set: " + "; ".join(bad))

    @property
    def max_index(self) -> int:
        return len(self.nu)

    def violations(self) -> list:
        out = []
        N = self.max_index
        for name in ("mu", "delta", "nu", "eps"):
            v = getattr(self, name)
            if any(x <= 0 for x in v):
                out.append(f"{name} not positive")
            if any(b >= a for a, b in zip(v, v[1:])):
                out.append(f"{name} not strictly decreasing")
        if any(x >= 1 for x in self.nu):
            out.append("nu not below 1")
        qs = [meridian_azimuth(n) for n in range(1, N + 1)]
        ps = [midpoint_azimuth(n) for n in range(1, N)]
        for n in range(N):
            rn = self.eps[n] / 2
            for m in range(N - 1):
                if abs(qs[n] - ps[m]) <= rn + self.delta[m] / 2:
                    out.append(f"U_{m + 1} meets V_{n + 1}")
            for m in range(n + 1, N):
                gap = abs(qs[n] - qs[m]) - rn - self.eps[m] / 2
                if gap <= 0:
                    out.append(f"V_{n + 1} meets V_{m + 1}")
                elif gap < 4 * max(self.eps[n], self.eps[m]):
                    out.append(f"V_{n + 1}, V_{m + 1} closer than 4 eps")
            for m in _adjacent(n + 1, N - 1):
                gain = 0.25 * sqrt1p_minus1(self.mu[m - 1]) * self.delta[m - 1]
                if 2 * self.eps[n] * self.nu[n] > gain:
                    out.append(f"dip {n + 1} too deep for cap {m}")
        return out

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "delta": list(self.delta),
                "nu": list(self.nu), "eps": list(self.eps)}

    @classmethod
    def from_dict(cls, d: dict, enforce: bool = True) -> "TimelikeParamSet":
        return cls(d["mu"], d["delta"], d["nu"], d["eps"], enforce=enforce)


def excess_cover_holds(params: TimelikeParamSet, factor: FactorSpec) -> bool:
    """Sampled check that Omega >= 1 + mu_n on every cap U_n."""
    for n, (mu, delta) in enumerate(zip(params.mu, params.delta), start=1):
        th, ph = cap_samples(midpoint_azimuth(n), delta / 2)
        if np.min(factor.excess_angles(th, ph)) < mu:
            return False
    return True


def choose_dips(excesses) -> TimelikeParamSet:
    """Dip diameters and depths for N = len(excesses) + 1 meridians."""
    mu = [float(m) for m, _ in excesses]
    delta = [float(d) for _, d in excesses]
    for k in range(1, len(delta)):
        delta[k] = min(delta[k], DECREASE * delta[k - 1])
        mu[k] = min(mu[k], DECREASE * mu[k - 1])
    N = len(excesses) + 1
    eps, nu = [], []
    for n in range(1, N + 1):
        q = meridian_azimuth(n)
        sep = min(abs(q - meridian_azimuth(m)) for m in (n - 1, n + 1) if m >= 1)
        clear = min(abs(q - midpoint_azimuth(m)) - delta[m - 1] / 2 for m in range(1, N))
        e = min(sep, clear) / 8
        if eps:
            e = min(e, DECREASE * eps[-1])
        if e <= 0:
            raise ValueError(f"no room for a dip at q_{n}")
        eps.append(e)
    for n in range(1, N + 1):
        v = min(sqrt1p_minus1(mu[m - 1]) * delta[m - 1] / (16 * eps[n - 1])
                for m in _adjacent(n, N - 1))
        v = min(0.5, v)
        if nu:
            v = min(v, DECREASE * nu[-1])
        nu.append(v)
    return TimelikeParamSet(tuple(mu), tuple(delta), tuple(nu), tuple(eps))


def derive_params(factor: FactorSpec, max_index: int = 6) -> TimelikeParamSet:
    if max_index > factor.max_index:
        raise ValueError("more dips than flat meridians")
    return choose_dips([derive_excess(factor, n) for n in range(1, max_index)])


def build_modified_factor(base: FactorSpec, params: TimelikeParamSet) -> FactorSpec:
    if base.variant != "base":
        raise ValueError("dips are placed on the base factor")
    bad = params.violations()
    if bad:
        raise ValueError("invalid parameter set: " + "; ".join(bad))
    dips = [Dip(n, e, v) for n, (e, v) in enumerate(zip(params.eps, params.nu), start=1)]
    return base.with_dips(dips)


@dataclass
class MidpointExcess:
    index: int
    azimuth: float
    excess: float
    error: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MidpointExcessReport:
    levels: tuple
    entries: list
    flags: list

    @property
    def validated(self) -> bool:
        return not self.flags and all(e.verdict == "validated" for e in self.entries)

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "validated": self.validated,
                "flags": list(self.flags), "entries": [e.to_dict() for e in self.entries]}


def validate_midpoint_excess(factor: FactorSpec, params: TimelikeParamSet, indices=None,
                     levels=(6, 7)) -> MidpointExcessReport:
    """Excess of d(N, p_n) + d(p_n, S) over pi, with a two-level error bar.

    A positive excess means no N-S curve through p_n has g*-length <= pi.
    """
    indices = list(indices or range(1, params.max_index))
    ps = [midpoint_azimuth(n) for n in indices]
    coarse, fine = (excess_field(factor, lv, extra=ps) for lv in levels)
    entries = []
    flags = [f"parameter: {v}" for v in params.violations()]
    for n, phi in zip(indices, ps):
        a = float(coarse.equator_excess_at(phi)[0])
        b = float(fine.equator_excess_at(phi)[0])
        err = abs(b - a)
        if b > err:
            verdict = "validated"
        elif b < -err:
            verdict = "negative"
        else:
            verdict = "inconclusive"
        entries.append(MidpointExcess(n, phi, b, err, verdict))
        if verdict != "validated":
            flags.append(f"p_{n}: {verdict}")
    return MidpointExcessReport(tuple(levels), entries, flags)


# interface name kept for existing callers
validate_claim32 = validate_midpoint_excess
