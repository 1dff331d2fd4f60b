"""Stratified bootstrap: percentile intervals and two-sided P values.

Subjects are resampled with replacement inside each arm, so every resample
keeps the original arm sizes. Resample ``i`` draws from its own Philox
stream keyed by ``SeedSequence(seed, spawn_key=(i,))``; results therefore do
not depend on the order or the number of threads the resamples run on.

Inside a resample, curves are evaluated past that resample's own last
observation by carrying the Kaplan-Meier value forward: the full-data
estimand is defined there, and dropping such resamples would bias the
interval.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import ArmView, SurvivalDataset, split_by_arm
from .errors import (ComputationError, DomainExceeded, EstimandUndefinedOnFullData,
                     TooManyFailedResamples, ValidationError)
from .km import KmCurve, fit_km
from .milestone import milestone_survival
from .rmst import drmst_process, rmst, susceptible_drmst
from .tau import susceptible_tau, tau_process

__all__ = ["Estimand", "InferenceResult", "CurveBand", "bootstrap", "bootstrap_curve",
           "evaluate_estimand", "resample_rng", "percentile_p_value",
           "SCALAR_KINDS", "CURVE_KINDS", "DEFAULT_RESAMPLES", "MAX_FAILED_FRACTION"]

SCALAR_KINDS = ("milestone_contrast", "tau_at", "susceptible_tau_at", "drmst_at",
                "susceptible_drmst_at")
CURVE_KINDS = ("tau", "susceptible_tau", "drmst", "susceptible_drmst")
DEFAULT_RESAMPLES = 10_000
MAX_FAILED_FRACTION = 0.10


@dataclass(frozen=True)
class Estimand:
    """A scalar contrast of arm ``arm_pair[0]`` against ``arm_pair[1]``.

    ``milestone_contrast`` uses only ``m``; ``tau_at`` and ``drmst_at`` only
    ``t``; the susceptible kinds need both, with ``t <= m``.
    """
    kind: str
    t: float | None = None
    m: float | None = None
    arm_pair: tuple[int, int] = (1, 0)

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ValidationError(f"unknown estimand kind {self.kind!r}")
        needs_m = self.kind == "milestone_contrast" or self.kind.startswith("susceptible")
        needs_t = self.kind != "milestone_contrast"
        if needs_m != (self.m is not None):
            raise ValidationError(f"{self.kind}: milestone m {'required' if needs_m else 'not allowed'}")
        if needs_t != (self.t is not None):
            raise ValidationError(f"{self.kind}: time t {'required' if needs_t else 'not allowed'}")
        if self.m is not None and self.m <= 0:
            raise ValidationError("milestone must be positive")
        if self.t is not None and self.t < 0:
            raise ValidationError("t must be nonnegative")
        if self.kind.startswith("susceptible") and self.t > self.m:
            raise ValidationError("susceptible estimands need t <= m")
        if self.arm_pair[0] == self.arm_pair[1]:
            raise ValidationError("arm_pair must name two different arms")


@dataclass(frozen=True)
class InferenceResult:
    point: float
    ci_low: float
    ci_high: float
    p_value: float
    n_resamples: int
    n_failed: int
    seed: int
    level: float
    point_outside_ci: bool = False
    replicates: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def failure_rate(self) -> float:
        return self.n_failed / self.n_resamples


@dataclass(frozen=True, eq=False)
class CurveBand:
    """Pointwise percentile band for a curve estimand on ``grid``."""
    kind: str
    grid: np.ndarray
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_resamples: int
    n_failed: int
    seed: int
    level: float


def resample_rng(seed: int, i: int) -> np.random.Generator:
    """Generator for resample ``i``: Philox keyed by ``SeedSequence(seed, spawn_key=(i,))``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))


def evaluate_estimand(est: Estimand, c1: KmCurve, c0: KmCurve, extend: bool = False) -> float:
    k = est.kind
    if k == "milestone_contrast":
        return (milestone_survival(c1, est.m, extend=extend)
                - milestone_survival(c0, est.m, extend=extend))
    if k == "tau_at":
        return float(tau_process(c1, c0, est.t, extend=extend).process(est.t))
    if k == "susceptible_tau_at":
        return float(susceptible_tau(c1, c0, est.m, extend=extend).process(est.t))
    if k == "drmst_at":
        return rmst(c1, est.t, extend=extend) - rmst(c0, est.t, extend=extend)
    return float(susceptible_drmst(c1, c0, est.m, extend=extend).process(est.t))


def _curve_values(kind, grid, m, c1, c0, extend):
    t_end = float(grid[-1])
    if kind == "tau":
        return tau_process(c1, c0, t_end, extend=extend).process(grid)
    if kind == "susceptible_tau":
        tc = susceptible_tau(c1, c0, m, extend=extend)
        if t_end > m:
            raise DomainExceeded(f"grid extends past milestone {m:g}")
        return tc.process(grid)
    if kind == "drmst":
        return drmst_process(c1, c0, t_end, extend=extend).process(grid)
    dc = susceptible_drmst(c1, c0, m, extend=extend)
    if t_end > m:
        raise DomainExceeded(f"grid extends past milestone {m:g}")
    return dc.process(grid)


def percentile_p_value(replicates: np.ndarray) -> float:
    """Two-sided bootstrap P value for the null value 0.

    ``2 * min(#{x < 0} + #{x = 0}/2, #{x > 0} + #{x = 0}/2) / B``, clamped to ``[2/B, 1]``.
    """
    b = replicates.size
    zero = np.sum(replicates == 0)
    lo = np.sum(replicates < 0) + 0.5 * zero
    hi = np.sum(replicates > 0) + 0.5 * zero
    p = 2.0 * min(lo, hi) / b
    return float(min(1.0, max(2.0 / b, p)))


def _run_resamples(views: dict[int, ArmView], arms: Sequence[int], stat, n_resamples: int,
                   seed: int, n_jobs: int, width: int) -> np.ndarray:
    out = np.full((n_resamples, width), np.nan)

    def work(lo, hi):
        for i in range(lo, hi):
            rng = resample_rng(seed, i)
            curves = {}
            for a in arms:
                v = views[a]
                idx = np.sort(rng.integers(0, v.n, v.n))
                curves[a] = fit_km(ArmView(v.times[idx], v.events[idx]))
            try:
                out[i] = stat(curves)
            except ComputationError:
                pass

    if n_jobs <= 1:
        work(0, n_resamples)
    else:
        edges = np.linspace(0, n_resamples, n_jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            list(ex.map(work, edges[:-1], edges[1:]))
    return out


def _check_common(n_resamples, level):
    if n_resamples < 100:
        raise ValidationError("need at least 100 bootstrap resamples")
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")


def bootstrap(ds: SurvivalDataset, est: Estimand, n_resamples: int = DEFAULT_RESAMPLES,
              level: float = 0.95, seed: int = 0, n_jobs: int = 1) -> InferenceResult:
    """Stratified bootstrap of a scalar estimand.

    Resamples where the estimand is undefined (for example an arm with no
    event before the milestone) are dropped and counted in ``n_failed``.

    Raises
    ------
    EstimandUndefinedOnFullData
        The estimand cannot be computed on ``ds`` itself.
    TooManyFailedResamples
        More than 10% of resamples failed.
    """
    _check_common(n_resamples, level)
    views = split_by_arm(ds)
    j, r = est.arm_pair
    for a in (j, r):
        if a not in views:
            raise ValidationError(f"arm {a} not in dataset")
    try:
        point = evaluate_estimand(est, fit_km(views[j]), fit_km(views[r]))
    except ComputationError as exc:
        raise EstimandUndefinedOnFullData(str(exc)) from exc

    arms = sorted((j, r))
    stat = lambda curves: evaluate_estimand(est, curves[j], curves[r], extend=True)  # noqa: E731
    reps = _run_resamples(views, arms, stat, n_resamples, seed, n_jobs, 1)[:, 0]
    ok = ~np.isnan(reps)
    n_failed = int(n_resamples - ok.sum())
    if n_failed > MAX_FAILED_FRACTION * n_resamples:
        raise TooManyFailedResamples(
            f"{n_failed} of {n_resamples} resamples could not evaluate {est.kind}")
    good = reps[ok]
    alpha = 1.0 - level
    lo, hi = np.quantile(good, [alpha / 2, 1 - alpha / 2])
    reps.setflags(write=False)
    return InferenceResult(point=float(point), ci_low=float(lo), ci_high=float(hi),
                           p_value=percentile_p_value(good), n_resamples=n_resamples,
                           n_failed=n_failed, seed=seed, level=level,
                           point_outside_ci=not (lo <= point <= hi), replicates=reps)


def bootstrap_curve(ds: SurvivalDataset, kind: str, grid: Sequence[float],
                    arm_pair: tuple[int, int] = (1, 0), m: float | None = None,
                    n_resamples: int = DEFAULT_RESAMPLES, level: float = 0.95,
                    seed: int = 0, n_jobs: int = 1) -> CurveBand:
    """Pointwise percentile band for a tau or dRMST curve on ``grid``.

    Uses the same per-resample streams as :func:`bootstrap`, so a one-point
    grid reproduces the corresponding scalar bootstrap.
    """
    _check_common(n_resamples, level)
    if kind not in CURVE_KINDS:
        raise ValidationError(f"unknown curve kind {kind!r}")
    if kind.startswith("susceptible") and m is None:
        raise ValidationError(f"{kind} needs a milestone")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValidationError("grid must be nonempty, sorted and nonnegative")
    views = split_by_arm(ds)
    j, r = arm_pair
    try:
        point = _curve_values(kind, grid, m, fit_km(views[j]), fit_km(views[r]), False)
    except DomainExceeded:
        raise
    except ComputationError as exc:
        raise EstimandUndefinedOnFullData(str(exc)) from exc
    arms = sorted((j, r))
    stat = lambda curves: _curve_values(kind, grid, m, curves[j], curves[r], True)  # noqa: E731
    reps = _run_resamples(views, arms, stat, n_resamples, seed, n_jobs, grid.size)
    ok = ~np.isnan(reps[:, 0])
    n_failed = int(n_resamples - ok.sum())
    if n_failed > MAX_FAILED_FRACTION * n_resamples:
        raise TooManyFailedResamples(
            f"{n_failed} of {n_resamples} resamples could not evaluate {kind}")
    alpha = 1.0 - level
    lo, hi = np.quantile(reps[ok], [alpha / 2, 1 - alpha / 2], axis=0)
    return CurveBand(kind, grid, np.asarray(point, dtype=float), lo, hi,
                     n_resamples, n_failed, seed, level)
