"""Restricted mean survival time and the dRMST process."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainExceeded
from .km import KmCurve
from .milestone import susceptible_survival
from .stepfn import PiecewiseLinear, StepFunction

__all__ = ["DrmstCurve", "rmst", "drmst_from_survival", "drmst_process",
           "susceptible_drmst"]


@dataclass(frozen=True, eq=False)
class DrmstCurve:
    """``mu(t) = int_0^t (S1 - S0) du``, piecewise linear with kinks at jump times."""
    process: PiecewiseLinear
    arm_pair: tuple[int, int]
    domain_end: float
    milestone: float | None = None

    def __call__(self, t):
        if np.any(np.asarray(t) > self.domain_end):
            raise DomainExceeded(f"dRMST requested beyond {self.domain_end:g}")
        return self.process(t)


def rmst(curve: KmCurve, t: float, extend: bool = False) -> float:
    """``int_0^t S(u) du`` by exact step integration."""
    if not extend and t > curve.max_observed:
        raise DomainExceeded(f"t={t:g} beyond last observed time {curve.max_observed:g}")
    return float(curve.survival.cumulative_integral(t))


def drmst_from_survival(s1: StepFunction, s0: StepFunction, t_end: float) -> PiecewiseLinear:
    knots = np.union1d(s0.jump_times, s1.jump_times)
    knots = np.concatenate(([0.0], knots[(knots > 0) & (knots < t_end)], [t_end]))
    if t_end == 0:
        knots = np.array([0.0])
    vals = s1.cumulative_integral(knots) - s0.cumulative_integral(knots)
    return PiecewiseLinear(knots, vals)


def drmst_process(curve1: KmCurve, curve0: KmCurve, t_end: float | None = None,
                  arm_pair: tuple[int, int] = (1, 0), extend: bool = False) -> DrmstCurve:
    if t_end is None:
        t_end = min(curve0.max_observed, curve1.max_observed)
    if not extend:
        for c in (curve0, curve1):
            if t_end > c.max_observed:
                raise DomainExceeded(
                    f"t_end={t_end:g} beyond an arm's follow-up ({c.max_observed:g})")
    return DrmstCurve(drmst_from_survival(curve1.survival, curve0.survival, t_end),
                      tuple(arm_pair), float(t_end))


def susceptible_drmst(curve1: KmCurve, curve0: KmCurve, m: float,
                      arm_pair: tuple[int, int] = (1, 0), extend: bool = False) -> DrmstCurve:
    """dRMST between the susceptible curves of two arms on ``[0, m]``."""
    sa1 = susceptible_survival(curve1, m, extend=extend)
    sa0 = susceptible_survival(curve0, m, extend=extend)
    return DrmstCurve(drmst_from_survival(sa1, sa0, m), tuple(arm_pair), float(m),
                      milestone=float(m))
