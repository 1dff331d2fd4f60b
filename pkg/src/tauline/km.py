"""Kaplan-Meier estimation, risk sets and follow-up maturity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ArmView
from .errors import DomainExceeded
from .stepfn import SurvivalCurve

__all__ = ["KmCurve", "AtRiskProcess", "MaturityReport", "fit_km", "at_risk",
           "maturity_check", "DEFAULT_MATURITY_THRESHOLD"]

DEFAULT_MATURITY_THRESHOLD = 0.10


@dataclass(frozen=True, eq=False)
class KmCurve:
    """Product-limit estimate for one arm.

    ``survival`` jumps only at ``event_times``; ``d`` and ``y`` hold the event
    and at-risk counts there. Evaluation through :meth:`evaluate` is
    restricted to ``[0, max_observed]``.
    """
    survival: SurvivalCurve
    event_times: np.ndarray
    d: np.ndarray
    y: np.ndarray
    n: int
    max_observed: float
    last_is_event: bool

    def evaluate(self, t, extend: bool = False):
        """``S(t)``; raises :class:`DomainExceeded` past the last observation
        unless ``extend`` is set, in which case the last value is carried forward."""
        if not extend and np.any(np.asarray(t) > self.max_observed):
            raise DomainExceeded(
                f"t={np.max(t):g} beyond last observed time {self.max_observed:g}")
        return self.survival(t)

    __call__ = evaluate

    @property
    def n_events(self) -> int:
        return int(self.d.sum())


@dataclass(frozen=True, eq=False)
class AtRiskProcess:
    """``Y(t) = #{i : X_i >= t}``, tabulated at 0 and every distinct observed time."""
    grid: np.ndarray
    counts: np.ndarray

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        k = np.searchsorted(self.grid, t_arr, side="left")
        padded = np.concatenate((self.counts, [0]))
        out = padded[k]
        return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MaturityReport:
    t: float
    n_at_risk: int
    n: int
    fraction_at_risk: float
    threshold: float
    flag: bool


def _km_arrays(times: np.ndarray, events: np.ndarray):
    """Distinct event times, d, y and S for sorted ``times``."""
    n = times.size
    uniq, first, counts = np.unique(times, return_index=True, return_counts=True)
    d_all = np.add.reduceat(events.astype(np.int64), first) if n else np.empty(0, int)
    y_all = n - first
    has = d_all > 0
    ut, d, y = uniq[has], d_all[has], y_all[has]
    s = np.cumprod(1.0 - d / y)
    return ut, d, y, s


def fit_km(view: ArmView) -> KmCurve:
    """Kaplan-Meier estimate of one arm.

    At tied times events are processed before censorings, so a subject
    censored at ``u`` is still in the risk set for events at ``u``.
    """
    if view.n == 0:
        raise ValueError("cannot fit a Kaplan-Meier curve to an empty arm")
    ut, d, y, s = _km_arrays(view.times, view.events)
    # the sorted view puts events first among ties, so the last entry is
    # an event exactly when some event happens at the largest time
    tmax = float(view.times[-1])
    last_is_event = bool(view.events[view.times == tmax].any())
    return KmCurve(survival=SurvivalCurve(ut, s, 1.0), event_times=ut, d=d, y=y,
                   n=view.n, max_observed=tmax, last_is_event=last_is_event)


def at_risk(view: ArmView) -> AtRiskProcess:
    """Risk-set sizes at time 0 and at each distinct observed time."""
    uniq, first = np.unique(view.times, return_index=True)
    grid = np.concatenate(([0.0], uniq[uniq > 0]))
    counts = view.n - np.searchsorted(view.times, grid, side="left")
    return AtRiskProcess(grid, counts)


def maturity_check(view: ArmView, t: float,
                   threshold: float = DEFAULT_MATURITY_THRESHOLD) -> MaturityReport:
    """Fraction of the arm still at risk at ``t``; flagged when below ``threshold``."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    y = int(view.n - np.searchsorted(view.times, t, side="left"))
    frac = y / view.n
    return MaturityReport(float(t), y, view.n, frac, float(threshold), frac < threshold)
