"""Pseudo individual-level data from digitised Kaplan-Meier curves.

Input is a set of ``(time, survival)`` coordinates read off a published
figure plus the numbers-at-risk table printed under it. Between consecutive
risk-table times the number of censorings is chosen so that the implied risk
set at the next table time matches the table exactly; censorings are spread
uniformly over the interval and events are placed at the digitised drops so
the product-limit curve tracks the coordinates.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from .data import ArmView, SurvivalDataset
from .errors import (InconsistentRiskTable, InfeasibleTotalEvents, NonMonotoneCurve,
                     ReconstructionWarning, ValidationError)
from .km import fit_km

__all__ = ["DigitizedCurve", "PseudoIpd", "ReconstructionDiagnostics",
           "reconstruct_arm", "validate_reconstruction", "digitize_km",
           "MONOTONE_TOLERANCE"]

MONOTONE_TOLERANCE = 0.005


@dataclass(frozen=True, eq=False)
class DigitizedCurve:
    """Digitised coordinates and numbers at risk for one arm.

    Survival values that rise by at most 0.005 (digitisation noise) are
    projected onto a nonincreasing sequence; ``repair_delta`` records the
    largest change. Larger rises raise :class:`NonMonotoneCurve`.
    """
    points: np.ndarray
    risk_table: np.ndarray
    total_events: int | None = None
    arm: str = "0"
    repair_delta: float = field(default=0.0, init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        rt = np.array(self.risk_table, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            raise ValidationError("no digitised points")
        if rt.shape[0] == 0:
            raise InconsistentRiskTable("risk table needs at least the initial count")
        t, s = pts[:, 0], pts[:, 1]
        if np.any(np.diff(t) < 0):
            raise ValidationError("digitised times must be nondecreasing")
        if abs(t[0]) > MONOTONE_TOLERANCE or abs(s[0] - 1.0) > MONOTONE_TOLERANCE:
            raise ValidationError("first digitised point must be (0, 1) within 0.005")
        if s.min() < -MONOTONE_TOLERANCE or s.max() > 1 + MONOTONE_TOLERANCE:
            raise ValidationError("survival values must lie in [0, 1]")
        rise = np.max(s - np.minimum.accumulate(s))
        if rise > MONOTONE_TOLERANCE:
            raise NonMonotoneCurve(f"survival rises by {rise:.4f} (tolerance {MONOTONE_TOLERANCE})")
        s_fixed = np.clip(isotonic_regression(s, increasing=False).x, 0.0, 1.0)
        delta = float(np.max(np.abs(s_fixed - s)))
        t = t.copy()
        t[0], s_fixed[0] = 0.0, 1.0
        rtt, rtn = rt[:, 0], rt[:, 1]
        if np.any(np.diff(rtt) <= 0):
            raise InconsistentRiskTable("risk-table times must be increasing")
        if np.any(rtn != np.round(rtn)) or np.any(rtn < 0):
            raise InconsistentRiskTable("risk-table counts must be nonnegative integers")
        if np.any(np.diff(rtn) > 0):
            raise InconsistentRiskTable("risk-table counts must be nonincreasing")
        if rtn[0] <= 0:
            raise InconsistentRiskTable("initial number at risk must be positive")
        if rtt[0] > t[0] + MONOTONE_TOLERANCE:
            raise InconsistentRiskTable("risk table must start at or before the first point")
        if self.total_events is not None and not 0 <= int(self.total_events) <= rtn[0]:
            raise InfeasibleTotalEvents("total_events outside [0, initial number at risk]")
        pts = np.column_stack((t, s_fixed))
        pts.setflags(write=False)
        rt.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "risk_table", rt)
        object.__setattr__(self, "repair_delta", delta)
        object.__setattr__(self, "arm", str(self.arm))
        if self.total_events is not None:
            object.__setattr__(self, "total_events", int(self.total_events))

    @classmethod
    def from_json(cls, doc: dict | str) -> "DigitizedCurve":
        """``{"arm": ..., "points": [[t, s], ...], "risk_table": [[t, n], ...], "total_events": int|null}``"""
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            return cls(doc["points"], doc["risk_table"], doc.get("total_events"),
                       arm=str(doc.get("arm", "0")))
        except KeyError as exc:
            raise ValidationError(f"digitised curve JSON lacks {exc.args[0]!r}") from None

    def to_json(self) -> dict:
        return {"arm": self.arm, "points": self.points.tolist(),
                "risk_table": self.risk_table.tolist(), "total_events": self.total_events}


@dataclass(frozen=True)
class ReconstructionDiagnostics:
    sup_distance: float
    risk_table_residuals: tuple[int, ...]
    event_residual: int | None
    repair_delta: float = 0.0
    degraded: bool = False

    def to_json(self) -> dict:
        return {"sup_distance": self.sup_distance,
                "risk_table_residuals": list(self.risk_table_residuals),
                "event_residual": self.event_residual,
                "repair_delta": self.repair_delta, "degraded": self.degraded}


@dataclass(frozen=True, eq=False)
class PseudoIpd:
    times: np.ndarray
    events: np.ndarray
    diagnostics: ReconstructionDiagnostics | None = None
    arm: str = "0"

    @property
    def n(self) -> int:
        return self.times.size

    def view(self) -> ArmView:
        return ArmView.from_unsorted(self.times, self.events)

    def to_dataset(self) -> SurvivalDataset:
        return SurvivalDataset(self.times, self.events, np.zeros(self.n, dtype=int),
                               arm_labels=[self.arm])


def _round_half_up(x):
    return int(np.floor(x + 0.5 + 1e-9))


class _Interval:
    """Event allocation for one risk-table interval given a censoring count."""

    def __init__(self, pt, ps, lo, hi, n_start, s_start):
        self.pt, self.ps = pt, ps
        self.lo, self.hi = lo, hi
        self.n_start, self.s_start = n_start, s_start

    def censor_times(self, c):
        return self.lo + (np.arange(1, c + 1)) * (self.hi - self.lo) / (c + 1)

    def run(self, c):
        cen = self.censor_times(c)
        d = np.zeros(self.pt.size, dtype=int)
        s_cur = self.s_start
        dead = 0
        for k, (t, s) in enumerate(zip(self.pt, self.ps)):
            y = self.n_start - dead - int(np.searchsorted(cen, t, side="left"))
            if y <= 0 or s_cur <= 0:
                continue
            dk = _round_half_up(y * (1.0 - s / s_cur))
            dk = min(max(dk, 0), y)
            d[k] = dk
            dead += dk
            s_cur *= 1.0 - dk / y
        return d, cen

    def km_path(self, d, cen):
        """Product-limit value after each digitised point."""
        s_cur = self.s_start
        dead = 0
        out = np.empty(self.pt.size)
        for k, t in enumerate(self.pt):
            y = self.n_start - dead - int(np.searchsorted(cen, t, side="left"))
            if d[k]:
                s_cur *= 1.0 - d[k] / y
                dead += d[k]
            out[k] = s_cur
        return out

    def fit_error(self, d, cen):
        return float(np.max(np.abs(self.km_path(d, cen) - self.ps))) if self.pt.size else 0.0

    def km_after(self, d, cen):
        s_cur = self.s_start
        dead = 0
        for k, t in enumerate(self.pt):
            y = self.n_start - dead - int(np.searchsorted(cen, t, side="left"))
            if d[k]:
                s_cur *= 1.0 - d[k] / y
                dead += d[k]
        return s_cur


def _solve_interval(iv: _Interval, target: int):
    """Censoring count and events reproducing ``target`` at risk at the interval end.

    Every feasible count is tried; among those meeting the target exactly the
    one whose product-limit curve tracks the digitised points best wins.
    """
    c_max = iv.n_start - target
    if c_max < 0:
        raise InconsistentRiskTable(
            f"number at risk rises from {iv.n_start} to {target} at t={iv.hi:g}")
    best = exact = None
    for c in range(c_max + 1):
        d, cen = iv.run(c)
        f = iv.n_start - int(d.sum()) - c - target
        if f == 0:
            err = iv.fit_error(d, cen)
            if exact is None or err < exact[0]:
                exact = (err, d, cen)
            continue
        # fallback: prefer a small surplus of subjects (fixed by tail censoring)
        key = (0 if f > 0 else 1, abs(f))
        if best is None or key < best[0]:
            best = (key, f, d, cen)
    if exact is not None:
        return exact[1], exact[2]
    _, f, d, cen = best
    if f > 0:
        # extra censorings after the last digitised point leave events untouched
        last = iv.pt[-1] if iv.pt.size else iv.lo
        extra = last + np.arange(1, f + 1) * (iv.hi - last) / (f + 1)
        cen = np.sort(np.concatenate((cen, extra)))
    else:
        d = d.copy()
        need = -f
        for k in range(d.size - 1, -1, -1):
            take = min(need, d[k])
            d[k] -= take
            need -= take
            if need == 0:
                break
    return d, cen


def _sup_error(times, events, pt, ps):
    return float(np.max(np.abs(fit_km(ArmView.from_unsorted(times, events)).survival(pt) - ps)))


def _rebalance_events(times, events, delta, rt, pt, ps):
    """Flip ``|delta|`` subjects between censored and event status to match a total.

    A flip keeps each subject inside its risk-table interval, so every
    at-risk count at a table time is unchanged; each flip is the one that
    keeps the product-limit curve closest to the digitised points.
    """
    times, events = times.copy(), events.copy()
    edges = np.append(rt, np.inf)
    drop_t = pt[np.flatnonzero(np.diff(np.concatenate(([1.0], ps))) < 0)]
    for _ in range(abs(delta)):
        best = None
        interval = np.searchsorted(edges, times, side="right") - 1
        if delta > 0:
            # a censored subject becomes an event at a drop time in its interval
            for p in drop_t:
                k = np.searchsorted(edges, p, side="right") - 1
                pool = np.flatnonzero(~events & (interval == k))
                if pool.size == 0:
                    continue
                j = pool[np.argmin(np.abs(times[pool] - p))]
                t2, e2 = times.copy(), events.copy()
                t2[j], e2[j] = p, True
                err = _sup_error(t2, e2, pt, ps)
                if best is None or err < best[0]:
                    best = (err, t2, e2)
        else:
            # an event becomes a censoring at the same time
            for u in np.unique(times[events]):
                j = np.flatnonzero(events & (times == u))[0]
                e2 = events.copy()
                e2[j] = False
                err = _sup_error(times, e2, pt, ps)
                if best is None or err < best[0]:
                    best = (err, times, e2)
        if best is None:
            raise InfeasibleTotalEvents("cannot place the requested number of events")
        _, times, events = best
    return times, events


def reconstruct_arm(dc: DigitizedCurve) -> PseudoIpd:
    """Rebuild event and censoring times for one arm.

    The risk table is honoured exactly at every table time. When
    ``total_events`` is given, subjects are then flipped between event and
    censored status within their risk-table intervals until the count
    matches (see :func:`_rebalance_events`). With only the initial risk-table row there is no censoring
    information: no censoring is assumed before the last digitised point
    and a :class:`ReconstructionWarning` is issued.
    """
    pt_all, ps_all = dc.points[:, 0], dc.points[:, 1]
    # keep the lowest value at repeated times (the post-drop reading)
    last_of_run = np.append(np.diff(pt_all) > 0, True)
    pt_all, ps_all = pt_all[last_of_run], ps_all[last_of_run]
    rt, rn = dc.risk_table[:, 0], dc.risk_table[:, 1].astype(int)
    degraded = rt.size == 1
    if degraded:
        warnings.warn("no risk table beyond the initial count: assuming no censoring "
                      "before the last digitised point", ReconstructionWarning, stacklevel=2)
    t_final = max(float(pt_all[-1]), float(rt[-1]))

    ev_t, ev_n, cen_all = [], [], []
    n_at, s_cur = int(rn[0]), 1.0
    cens_rate = 0.0
    for i in range(rt.size):
        lo = float(rt[i])
        last = i == rt.size - 1
        hi = t_final if last else float(rt[i + 1])
        sel = (pt_all >= lo) & ((pt_all <= hi) if last else (pt_all < hi))
        if i == 0:
            sel |= pt_all < lo
        iv = _Interval(pt_all[sel], ps_all[sel], lo, hi, n_at, s_cur)
        if not last:
            target = int(rn[i + 1])
            d, cen = _solve_interval(iv, target)
            if n_at > 0 and hi > lo:
                cens_rate = cen.size / (n_at * (hi - lo))
        else:
            c = 0 if degraded else min(_round_half_up(cens_rate * n_at * (hi - lo)), n_at)
            d, cen = iv.run(c)
        s_cur = iv.km_after(d, np.sort(cen))
        ev_t.extend(iv.pt[d > 0].tolist())
        ev_n.extend(d[d > 0].tolist())
        cen_all.extend(cen.tolist())
        n_at = n_at - int(d.sum()) - cen.size

    times = np.concatenate((np.repeat(ev_t, ev_n), cen_all, np.full(n_at, t_final)))
    events = np.concatenate((np.ones(int(sum(ev_n)), bool), np.zeros(len(cen_all) + n_at, bool)))
    if dc.total_events is not None and dc.total_events != int(events.sum()):
        times, events = _rebalance_events(times, events, dc.total_events - int(events.sum()),
                                          rt, pt_all, ps_all)
    order = np.lexsort((~events, times))
    ipd = PseudoIpd(times[order], events[order], None, dc.arm)
    diag = validate_reconstruction(dc, ipd)
    diag = ReconstructionDiagnostics(diag.sup_distance, diag.risk_table_residuals,
                                     diag.event_residual, dc.repair_delta, degraded)
    return PseudoIpd(ipd.times, ipd.events, diag, dc.arm)


def validate_reconstruction(dc: DigitizedCurve, ipd: PseudoIpd) -> ReconstructionDiagnostics:
    """Compare a pseudo-IPD against the curve and risk table it should reproduce."""
    rt, rn = dc.risk_table[:, 0], dc.risk_table[:, 1].astype(int)
    if ipd.n == 0:
        return ReconstructionDiagnostics(1.0, tuple(int(-x) for x in rn),
                                         None if dc.total_events is None else -dc.total_events,
                                         dc.repair_delta)
    view = ipd.view()
    km = fit_km(view)
    pt, ps = dc.points[:, 0], dc.points[:, 1]
    sup = float(np.max(np.abs(km.survival(pt) - ps)))
    y = view.n - np.searchsorted(view.times, rt, side="left")
    resid = tuple(int(a - b) for a, b in zip(y, rn))
    ev = None if dc.total_events is None else int(view.events.sum()) - dc.total_events
    return ReconstructionDiagnostics(sup, resid, ev, dc.repair_delta)


def digitize_km(view: ArmView, step: float = 0.1, risk_every: float = 6.0,
                t_max: float | None = None, with_total_events: bool = False,
                arm: str = "0") -> DigitizedCurve:
    """Sample an arm's Kaplan-Meier curve on a regular grid with a risk table,
    mimicking what is read off a published figure."""
    km = fit_km(view)
    if t_max is None:
        t_max = km.max_observed
    grid = np.round(np.arange(0.0, t_max + step / 2, step) / step) * step
    grid = grid[grid <= t_max]
    pts = np.column_stack((grid, km.survival(grid)))
    rtimes = np.round(np.arange(0.0, t_max + 1e-9, risk_every), 10)
    counts = view.n - np.searchsorted(view.times, rtimes, side="left")
    total = int(view.events[view.times <= t_max].sum()) if with_total_events else None
    return DigitizedCurve(pts, np.column_stack((rtimes, counts)), total, arm=arm)
