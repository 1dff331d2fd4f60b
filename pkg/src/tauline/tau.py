"""Overall and susceptible tau processes.

For two arms with survival curves ``S0`` (reference) and ``S1``::

    tau(t) = sum_{u <= t} S1(u) dF0(u) - sum_{u <= t} S0(u) dF1(u)

with ``S`` taken at its right-continuous value, so an event time shared by
both arms adds nothing. On uncensored data this equals the pairwise count
``[#{T0 <= t, T0 < T1} - #{T1 <= t, T1 < T0}] / (n0 n1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BandwidthTooLarge, DomainExceeded
from .km import KmCurve
from .milestone import susceptible_survival
from .stepfn import StepFunction, SurvivalCurve

__all__ = ["TauCurve", "TurningPoint", "tau_from_survival", "tau_process",
           "susceptible_tau", "pairwise_tau", "tau_slope", "turning_time",
           "slope_sign_changes"]


@dataclass(frozen=True, eq=False)
class TauCurve:
    process: StepFunction
    arm_pair: tuple[int, int]
    domain_end: float
    milestone: float | None = None

    def __call__(self, t):
        if np.any(np.asarray(t) > self.domain_end):
            raise DomainExceeded(f"tau requested beyond {self.domain_end:g}")
        return self.process(t)

    @property
    def jump_times(self) -> np.ndarray:
        return self.process.jump_times

    @property
    def values(self) -> np.ndarray:
        return self.process.values


@dataclass(frozen=True)
class TurningPoint:
    time: float
    direction: str
    tau_value: float
    flat: bool = False
    slope_crossing: float | None = None


def tau_from_survival(s1: StepFunction, s0: StepFunction, t_end: float) -> StepFunction:
    """Tau step function on ``[0, t_end]`` from two survival step functions."""
    grid = np.union1d(s0.jump_times, s1.jump_times)
    grid = grid[grid <= t_end]
    df0 = s0.left_limit(grid) - s0(grid)
    df1 = s1.left_limit(grid) - s1(grid)
    inc = s1(grid) * df0 - s0(grid) * df1
    # |tau| <= 1 - S0 S1 holds exactly in arithmetic; clamp away summation rounding
    bound = 1.0 - s0(grid) * s1(grid)
    return StepFunction(grid, np.clip(np.cumsum(inc), -bound, bound), 0.0)


def _check_domain(curve: KmCurve, t_end: float):
    if t_end > curve.max_observed:
        raise DomainExceeded(
            f"t_end={t_end:g} beyond an arm's follow-up ({curve.max_observed:g})")


def tau_process(curve1: KmCurve, curve0: KmCurve, t_end: float | None = None,
                arm_pair: tuple[int, int] = (1, 0), extend: bool = False) -> TauCurve:
    """Plug-in tau process of ``curve1`` (treatment) against ``curve0`` (reference).

    ``t_end`` defaults to the shorter of the two follow-ups.
    """
    if t_end is None:
        t_end = min(curve0.max_observed, curve1.max_observed)
    if not extend:
        _check_domain(curve0, t_end)
        _check_domain(curve1, t_end)
    proc = tau_from_survival(curve1.survival, curve0.survival, t_end)
    return TauCurve(proc, tuple(arm_pair), float(t_end))


def susceptible_tau(curve1: KmCurve, curve0: KmCurve, m: float,
                    arm_pair: tuple[int, int] = (1, 0), extend: bool = False) -> TauCurve:
    """Tau process between the susceptible curves ``S_a(.; m)`` of two arms on ``[0, m]``."""
    sa1 = susceptible_survival(curve1, m, extend=extend)
    sa0 = susceptible_survival(curve0, m, extend=extend)
    proc = tau_from_survival(sa1, sa0, m)
    return TauCurve(proc, tuple(arm_pair), float(m), milestone=float(m))


def pairwise_tau(curves: Mapping[int, KmCurve], reference: int = 0,
                 milestone: float | None = None) -> dict[int, TauCurve]:
    """Tau curves of every arm against ``reference``; susceptible ones if ``milestone`` is given.

    Overall curves are truncated at the shorter follow-up of each pair.
    """
    out = {}
    ref = curves[reference]
    for k, c in curves.items():
        if k == reference:
            continue
        if milestone is None:
            out[k] = tau_process(c, ref, arm_pair=(k, reference))
        else:
            out[k] = susceptible_tau(c, ref, milestone, arm_pair=(k, reference))
    return out


def _epanechnikov_cdf(x):
    x = np.clip(x, -1.0, 1.0)
    return 0.5 + 0.75 * x - 0.25 * x ** 3


def tau_slope(tc: TauCurve, bandwidth: float | None = None,
              grid: Sequence[float] | None = None) -> StepFunction:
    """Kernel-smoothed derivative of a tau step estimate.

    The jumps of ``tau`` are spread with an Epanechnikov kernel of half-width
    ``bandwidth`` (default: a tenth of the domain); near the domain edges the
    kernel is renormalised to its mass inside ``[0, domain_end]``. The result
    is tabulated on ``grid`` (default: 201 equally spaced points).
    """
    D = tc.domain_end
    if bandwidth is None:
        bandwidth = D / 10.0
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if bandwidth > D / 2.0:
        raise BandwidthTooLarge(f"bandwidth {bandwidth:g} exceeds half the domain ({D / 2:g})")
    g = np.linspace(0.0, D, 201) if grid is None else np.asarray(grid, dtype=float)
    u = tc.process.jump_times
    dtau = tc.process.jumps()
    z = (g[:, None] - u[None, :]) / bandwidth
    k = np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z ** 2), 0.0) / bandwidth
    mass = _epanechnikov_cdf(g / bandwidth) - _epanechnikov_cdf((g - D) / bandwidth)
    slope = (k @ dtau) / mass
    return StepFunction(g, slope, 0.0)


def slope_sign_changes(slope: StepFunction) -> list[tuple[float, str]]:
    """Grid times where a smoothed slope changes sign, tagged ``"min"`` (- to +) or ``"max"``."""
    v = slope.values
    s = np.sign(v)
    out = []
    prev = None
    for t, sg in zip(slope.jump_times, s):
        if sg == 0:
            continue
        if prev is not None and sg != prev:
            out.append((float(t), "min" if sg > 0 else "max"))
        prev = sg
    return out


def turning_time(tc: TauCurve, bandwidth: float | None = None) -> TurningPoint:
    """Earliest global minimiser of the tau step estimate over its jump times.

    The first negative-to-positive sign change of the smoothed slope is
    reported alongside as ``slope_crossing`` (``None`` if there is none or
    the bandwidth does not fit the domain).
    """
    v = tc.process.values
    t = tc.process.jump_times
    if v.size < 2:
        raise ValueError("turning time needs a tau curve with at least two jumps")
    crossing = None
    try:
        changes = slope_sign_changes(tau_slope(tc, bandwidth))
        mins = [c for c, kind in changes if kind == "min"]
        crossing = mins[0] if mins else None
    except BandwidthTooLarge:
        pass
    if np.ptp(v) == 0:
        return TurningPoint(float(t[0]), "min", float(v[0]), flat=True, slope_crossing=crossing)
    k = int(np.argmin(v))
    return TurningPoint(float(t[k]), "min", float(v[k]), slope_crossing=crossing)
