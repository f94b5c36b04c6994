"""Curves in R x S^2 with metric -dt^2 + Omega g0 and their causal type.

A curve t -> (tau(t), x(t)) is causal where the g*-speed of x does not exceed
tau'. Speeds are compared through the deviation ratio - 1, formed from
length excesses so that sub-ulp differences (dips of depth 1e-30 and
smaller) are resolved; every deviation carries its own rounding bound.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .factor import FactorSpec
from .lengths import EPS, DEFAULT_ORDER, excess_over, segment_lengths
from .sphere import NORTH, SphereCurve, meridian

TIMELIKE, LIGHTLIKE, CAUSAL, NONCAUSAL = "timelike", "lightlike", "causal", "non-causal"


class NoSlackError(ValueError):
    """The spatial projection is not shorter than the time span."""


@dataclass(frozen=True)
class SpacetimeCurve:
    """Sampled curve (tau(t), x(t)); ``lead_steps`` holds the increments of tau - t."""

    space: SphereCurve
    factor: FactorSpec
    lead_steps: np.ndarray | None = None

    def __post_init__(self):
        if self.lead_steps is not None:
            steps = np.asarray(self.lead_steps, dtype=float)
            if steps.shape != (len(self.space.params) - 1,):
                raise ValueError("one lead increment per segment")
            if np.any(np.diff(self.space.params) + steps <= 0):
                raise ValueError("time samples must increase strictly")
            object.__setattr__(self, "lead_steps", steps)

    @property
    def t(self) -> np.ndarray:
        return self.space.params

    @property
    def time_steps(self) -> np.ndarray:
        dt = np.diff(self.t)
        return dt if self.lead_steps is None else dt + self.lead_steps

    @property
    def tau(self) -> np.ndarray:
        if self.lead_steps is None:
            return self.t.copy()
        lead = np.concatenate([[0.0], np.cumsum(self.lead_steps)])
        lead[-1] = 0.0 if self.is_closed_lead else lead[-1]
        return self.t + lead

    @property
    def is_closed_lead(self) -> bool:
        return self.lead_steps is not None and abs(math.fsum(self.lead_steps)) <= 4 * EPS * abs(self.t[-1])

    def with_factor(self, factor: FactorSpec) -> "SpacetimeCurve":
        return SpacetimeCurve(self.space, factor, self.lead_steps)


@dataclass
class CausalClass:
    verdict: str
    worst_ratio: float
    worst_deviation: float
    slack: float
    slack_error: float
    deviations: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)

    @property
    def ratios(self) -> np.ndarray:
        return 1.0 + self.deviations

    @property
    def max_abs_deviation(self) -> float:
        return float(np.max(np.abs(self.deviations)))

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "worst_ratio": self.worst_ratio,
                "worst_deviation": self.worst_deviation, "slack": self.slack,
                "slack_error": self.slack_error}


def lift_meridian(n: int, factor: FactorSpec, samples: int = 2048) -> SpacetimeCurve:
    """t -> (t, gamma_n(t)) on [0, pi], gamma_n the unit-speed n-th flat meridian."""
    if not 1 <= n <= factor.max_index:
        raise ValueError(f"meridian index {n} outside 1..{factor.max_index}")
    return SpacetimeCurve(meridian(n=n, samples=samples), factor)


def lift_curve(curve: SphereCurve, factor: FactorSpec) -> SpacetimeCurve:
    return SpacetimeCurve(curve, factor)


def stationary(point=NORTH, factor: FactorSpec | None = None, samples: int = 256,
               t1: float = math.pi) -> SpacetimeCurve:
    t = np.linspace(0.0, t1, samples + 1)
    pts = np.repeat(np.asarray(point, dtype=float)[None, :], len(t), axis=0)
    return SpacetimeCurve(SphereCurve(t, pts), factor or FactorSpec.unit())


def _deviations(curve: SpacetimeCurve, order: int):
    seg = segment_lengths(curve.factor, curve.space, order)
    dtau = curve.time_steps
    num = seg.g0_minus_param() + seg.excess
    err = seg.error.copy()
    if not seg.unit_speed:
        err += 4 * EPS * (seg.g0 + seg.dt)
    if curve.lead_steps is not None:
        num = num - curve.lead_steps
        err += 4 * EPS * np.abs(curve.lead_steps)
    return num / dtau, err / dtau


def classify(curve: SpacetimeCurve, tol: float | None = None, order: int = DEFAULT_ORDER) -> CausalClass:
    """Per-segment speed ratio g*-length / time step, against rounding bounds.

    With ``tol`` given, a fixed absolute band replaces the rounding bounds.
    """
    dev, err = _deviations(curve, order)
    if tol is not None:
        err = np.full_like(dev, tol)
    if np.any(dev > err):
        verdict = NONCAUSAL
    elif np.all(dev < -err):
        verdict = TIMELIKE
    elif np.all(np.abs(dev) <= err):
        verdict = LIGHTLIKE
    else:
        verdict = CAUSAL
    span = float(curve.tau[-1] - curve.tau[0])
    ex, ex_err = excess_over(curve.factor, curve.space, target=span, order=order)
    k = int(np.argmax(dev))
    return CausalClass(verdict, float(1.0 + dev[k]), float(dev[k]), -ex, ex_err, dev, err)


def deform_to_timelike(curve: SpacetimeCurve, tol: float | None = None,
                       order: int = DEFAULT_ORDER) -> SpacetimeCurve:
    """Same spatial trace, time reparametrised by tau' = g*-speed + slack / span."""
    cls = classify(curve, order=order)
    if cls.verdict == NONCAUSAL:
        raise ValueError("curve is not causal")
    floor = cls.slack_error if tol is None else max(tol, cls.slack_error)
    if not cls.slack > floor:
        raise NoSlackError(f"no slack: projection is {-cls.slack:.3g} from the time span")
    seg = segment_lengths(curve.factor, curve.space, order)
    dt = np.diff(curve.t)
    span = float(curve.t[-1] - curve.t[0])
    # g*-length per segment minus dt, plus the uniformly spread slack
    steps = seg.g0_minus_param() + seg.excess + cls.slack * dt / span
    steps -= math.fsum(steps) * dt / span
    return SpacetimeCurve(curve.space, curve.factor, steps)


def write_curve_csv(curve: SpacetimeCurve, path, order: int = DEFAULT_ORDER) -> None:
    dev, _ = _deviations(curve, order)
    # per-sample value of the segment starting there; the last sample repeats
    dev = np.concatenate([dev, dev[-1:]])
    tau = curve.tau
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "tau", "x", "y", "z", "speed_ratio", "speed_ratio_minus_1"])
        for k, (t, x) in enumerate(zip(curve.t, curve.space.points)):
            w.writerow([repr(float(t)), repr(float(tau[k])), *(repr(float(v)) for v in x),
                        repr(float(1.0 + dev[k])), repr(float(dev[k]))])
