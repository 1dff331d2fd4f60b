"""Milestone decomposition: long-term survivor fractions and susceptible curves.

For a milestone ``m`` the survival curve splits, for ``t <= m``, as::

    S(t) = S_a(t; m) * (1 - eta(m)) + eta(m),      eta(m) = S(m)

where ``S_a`` is survival conditional on an event by ``m``. The plug-in
``S_a`` is a transform of the Kaplan-Meier curve, never a subject subset:
patients censored before ``m`` cannot be assigned to either part.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import SurvivalDataset
from .errors import MilestoneBeyondFollowUp, NoEventsBeforeMilestone
from .km import KmCurve
from .stepfn import SurvivalCurve

__all__ = ["MilestoneSummary", "MilestoneIndicator", "milestone_survival",
           "milestone_contrast", "susceptible_survival", "milestone_sweep",
           "classify_milestone", "summarize_milestone"]


def _check_m(curve: KmCurve, m: float):
    if m < 0:
        raise ValueError("milestone must be nonnegative")
    if m > curve.max_observed:
        raise MilestoneBeyondFollowUp(
            f"milestone {m:g} beyond last observed time {curve.max_observed:g}")


def milestone_survival(curve: KmCurve, m: float, extend: bool = False) -> float:
    """Long-term survivor fraction ``eta(m) = S(m)``."""
    if not extend:
        _check_m(curve, m)
    return float(curve.survival(m))


def milestone_contrast(eta_treat: float, eta_ref: float) -> float:
    for v in (eta_treat, eta_ref):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"milestone survival {v!r} outside [0, 1]")
    return eta_treat - eta_ref


def susceptible_survival(curve: KmCurve, m: float, extend: bool = False) -> SurvivalCurve:
    """Survival among subjects with an event by ``m``: ``(S(t) - eta) / (1 - eta)`` on ``[0, m]``.

    Raises
    ------
    NoEventsBeforeMilestone
        If ``S(m) == 1``; the conditional law does not exist.
    """
    eta = milestone_survival(curve, m, extend=extend)
    if eta >= 1.0:
        raise NoEventsBeforeMilestone(f"no events on [0, {m:g}]")
    s = curve.survival
    keep = s.jump_times <= m
    vals = (s.values[keep] - eta) / (1.0 - eta)
    return SurvivalCurve(s.jump_times[keep], vals, 1.0)


def milestone_sweep(curve: KmCurve, grid: Sequence[float]) -> list[tuple[float, float]]:
    """``[(m, eta(m)) for m in grid]``; nonincreasing in ``m``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size and np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    return [(float(m), milestone_survival(curve, m)) for m in grid]


@dataclass(frozen=True, eq=False)
class MilestoneIndicator:
    """Per-subject ``xi(m) = I(T <= m)``.

    ``xi`` is 1 for an observed event by ``m``, 0 for anyone observed beyond
    ``m`` (or censored exactly at ``m``), and -1 for subjects censored before
    ``m``, whose status is unknown.
    """
    m: float
    xi: np.ndarray

    @property
    def undetermined(self) -> np.ndarray:
        return np.flatnonzero(self.xi < 0)

    @property
    def n_failed(self) -> int:
        return int(np.sum(self.xi == 1))

    @property
    def n_survived(self) -> int:
        return int(np.sum(self.xi == 0))

    @property
    def n_undetermined(self) -> int:
        return int(np.sum(self.xi < 0))

    def failed_fraction_by_arm(self, arm: np.ndarray) -> dict[int, float | None]:
        """Share of determined subjects in each arm with an event by ``m``."""
        out = {}
        for k in np.unique(arm):
            x = self.xi[arm == k]
            det = x >= 0
            out[int(k)] = float(np.mean(x[det] == 1)) if det.any() else None
        return out


def classify_milestone(ds: SurvivalDataset, m: float) -> MilestoneIndicator:
    if m < 0:
        raise ValueError("milestone must be nonnegative")
    xi = np.full(len(ds), -1, dtype=np.int8)
    xi[ds.event & (ds.time <= m)] = 1
    xi[ds.time > m] = 0
    xi[~ds.event & (ds.time == m)] = 0
    return MilestoneIndicator(float(m), xi)


@dataclass(frozen=True, eq=False)
class MilestoneSummary:
    m: float
    eta: dict[int, float]
    contrasts: dict[int, float]
    susceptible_curves: dict[int, SurvivalCurve | None]
    susceptible_fraction: dict[int, float]

    def susceptible_ok(self, arm: int) -> bool:
        return self.susceptible_curves.get(arm) is not None


def summarize_milestone(curves: Mapping[int, KmCurve], m: float,
                        reference: int = 0) -> MilestoneSummary:
    """Milestone survival per arm, contrasts against ``reference`` and
    susceptible curves (``None`` where an arm has no event by ``m``)."""
    eta = {k: milestone_survival(c, m) for k, c in curves.items()}
    contrasts = {k: milestone_contrast(eta[k], eta[reference])
                 for k in curves if k != reference}
    sus = {}
    for k, c in curves.items():
        try:
            sus[k] = susceptible_survival(c, m)
        except NoEventsBeforeMilestone:
            sus[k] = None
    return MilestoneSummary(float(m), eta, contrasts, sus,
                            {k: 1.0 - v for k, v in eta.items()})
