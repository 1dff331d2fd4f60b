"""Two-group Cox model (Breslow ties) and the Schoenfeld-residual PH test."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .data import ArmView, SurvivalDataset
from .errors import ComputationError, MonotoneLikelihood, NoEvents, TooFewEvents
from .km import fit_km

__all__ = ["CoxFit", "PhTestResult", "EventTable", "event_table", "partial_loglik",
           "fit_cox_two_group", "schoenfeld_ph_test", "BETA_CAP"]

BETA_CAP = 20.0
MAX_ITER = 50
SCORE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EventTable:
    """Per distinct event time: events in total and in the treatment arm, and risk sets."""
    times: np.ndarray
    d: np.ndarray
    d1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray


def event_table(ds: SurvivalDataset, arm_pair: tuple[int, int] = (1, 0)) -> EventTable:
    j, r = arm_pair
    mask = (ds.arm == j) | (ds.arm == r)
    t = ds.time[mask]
    e = ds.event[mask]
    z = ds.arm[mask] == j
    ut = np.unique(t[e])
    t0, t1 = np.sort(t[~z]), np.sort(t[z])
    y0 = t0.size - np.searchsorted(t0, ut, side="left")
    y1 = t1.size - np.searchsorted(t1, ut, side="left")
    k = np.searchsorted(ut, t[e])
    d = np.bincount(k, minlength=ut.size)
    d1 = np.bincount(k[z[e]], minlength=ut.size)
    return EventTable(ut, d, d1, y0, y1)


def _log_y(y):
    with np.errstate(divide="ignore"):
        return np.log(y.astype(float))


def partial_loglik(tab: EventTable, beta):
    """Breslow log partial likelihood at ``beta`` (scalar or array)."""
    b = np.asarray(beta, dtype=float)[..., None]
    denom = np.logaddexp(_log_y(tab.y0), _log_y(tab.y1) + b)
    out = np.sum(tab.d1 * b - tab.d * denom, axis=-1)
    return float(out) if out.ndim == 0 else out


def _p1(tab: EventTable, beta: float) -> np.ndarray:
    return special.expit(beta + _log_y(tab.y1) - _log_y(tab.y0))


def _score_info(tab: EventTable, beta: float):
    p = _p1(tab, beta)
    return float(np.sum(tab.d1 - tab.d * p)), float(np.sum(tab.d * p * (1 - p)))


@dataclass(frozen=True)
class CoxFit:
    beta: float
    loglik: float
    score: float
    information: float
    iterations: int
    converged: bool
    monotone: bool = False
    arm_pair: tuple[int, int] = (1, 0)

    @property
    def hazard_ratio(self) -> float:
        return float(np.exp(self.beta))


def fit_cox_two_group(ds: SurvivalDataset, arm_pair: tuple[int, int] = (1, 0)) -> CoxFit:
    """Log hazard ratio of ``arm_pair[0]`` vs ``arm_pair[1]``.

    Newton iterations from 0 with step halving, stopping when
    ``|score| <= 1e-8``. If the likelihood has no finite maximiser the
    estimate is capped at +/-20, ``monotone`` is set and a
    :class:`MonotoneLikelihood` warning is issued.
    """
    j, r = arm_pair
    for a in (j, r):
        if not ds.event[ds.arm == a].any():
            raise NoEvents(f"arm {a} has no events")
    tab = event_table(ds, arm_pair)
    # limits of the score as beta -> +inf / -inf
    u_hi = np.sum(tab.d1) - np.sum(tab.d[tab.y1 > 0])
    u_lo = np.sum(tab.d1) - np.sum(tab.d[tab.y0 == 0])
    if u_hi >= 0 or u_lo <= 0:
        beta = BETA_CAP if u_hi >= 0 else -BETA_CAP
        warnings.warn(f"monotone partial likelihood; beta capped at {beta:+g}",
                      MonotoneLikelihood, stacklevel=2)
        s, i = _score_info(tab, beta)
        return CoxFit(beta, partial_loglik(tab, beta), s, i, 0, False, True, tuple(arm_pair))
    beta, it = 0.0, 0
    ll = partial_loglik(tab, beta)
    s, info = _score_info(tab, beta)
    while abs(s) > SCORE_TOL and it < MAX_ITER:
        step = s / info
        for _ in range(60):
            new = beta + step
            new_ll = partial_loglik(tab, new)
            # tolerance: at the optimum loglik differences are pure rounding
            if new_ll >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            step /= 2
        beta, ll = new, new_ll
        it += 1
        s, info = _score_info(tab, beta)
    converged = abs(s) <= SCORE_TOL
    return CoxFit(float(beta), float(ll), s, info, it, converged, False, tuple(arm_pair))


@dataclass(frozen=True, eq=False)
class PhTestResult:
    times: np.ndarray
    residuals: np.ndarray
    statistic: float
    p_value: float
    time_transform: str

    @property
    def residual_pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.residuals.tolist()))


def schoenfeld_ph_test(ds: SurvivalDataset, fit: CoxFit,
                       time_transform: str = "identity") -> PhTestResult:
    """Score test for a time-varying treatment coefficient ``beta + theta * g(t)``.

    Schoenfeld residuals ``d1(u) - d(u) p(u)`` are pooled per distinct event
    time. ``g`` is the event time (``"identity"``) or one minus the pooled
    left-continuous Kaplan-Meier curve (``"km"``). The statistic is
    ``U^2 / V`` with ``U = sum g r`` and ``V`` the information for ``theta``
    after adjusting for ``beta``; the P value is from chi-square(1).
    """
    if not fit.converged:
        raise ComputationError("PH test needs a converged Cox fit")
    if time_transform not in ("identity", "km"):
        raise ValueError("time_transform must be 'identity' or 'km'")
    tab = event_table(ds, fit.arm_pair)
    if tab.d.sum() < 3:
        raise TooFewEvents(f"only {int(tab.d.sum())} events; need at least 3")
    p = _p1(tab, fit.beta)
    resid = tab.d1 - tab.d * p
    v = tab.d * p * (1 - p)
    if time_transform == "identity":
        g = tab.times.astype(float)
    else:
        mask = np.isin(ds.arm, fit.arm_pair)
        km = fit_km(ArmView.from_unsorted(ds.time[mask], ds.event[mask]))
        g = 1.0 - km.survival.left_limit(tab.times)
    gbar = np.sum(g * v) / np.sum(v)
    gc = g - gbar
    u = float(np.sum(gc * resid))
    var = float(np.sum(gc ** 2 * v))
    if var <= 0:
        stat, pval = 0.0, 1.0
    else:
        stat = u * u / var
        pval = float(stats.chi2.sf(stat, 1))
    return PhTestResult(tab.times, resid, stat, pval, time_transform)
