"""Trial simulator, analytic truths and brute-force oracles.

All arms follow piecewise-exponential hazards, optionally mixed with a cured
fraction that never has the event. Cured subjects show up as censored at the
censoring time, as they would in a real trial.

Random streams
--------------
Arm ``a`` draws event times from ``Philox(SeedSequence(seed, spawn_key=(a, 0)))``
(first ``n`` uniforms for the cure indicator, then ``n`` unit exponentials)
and entry-time offsets from ``spawn_key=(a, 1)``. Event times therefore do not
depend on the censoring settings, and extending follow-up with the same seed
only moves censoring times later.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .data import ArmView, SurvivalDataset
from .errors import CensoredDataUnsupported, ValidationError

__all__ = ["Scenario", "TruthSheet", "simulate", "truth", "pairwise_tau_oracle",
           "KINDS", "DEFAULT_HR"]

KINDS = ("exponential", "piecewise_exponential", "cure_mixture", "delayed_effect",
         "crossing_hazards")

# (hazard ratio before changepoint, after changepoint) for arms >= 1
DEFAULT_HR = {"delayed_effect": (1.2, 0.6), "crossing_hazards": (0.5, 2.0)}


@dataclass(frozen=True)
class Scenario:
    """Simulation settings.

    ``rates[a]`` lists arm ``a``'s hazard on the intervals cut by ``breaks``
    (``len(breaks) + 1`` values; a single value means constant hazard). For
    ``delayed_effect`` and ``crossing_hazards`` only ``rates[0]`` is read:
    every other arm has hazard ``hr_before * h0(t)`` before ``changepoint``
    and ``hr_after * h0(t)`` after it.
    """
    kind: str
    n_per_arm: tuple[int, ...]
    rates: tuple[tuple[float, ...], ...]
    breaks: tuple[float, ...] = ()
    cure_fractions: tuple[float, ...] | None = None
    changepoint: float | None = None
    hr_before: float | None = None
    hr_after: float | None = None
    admin_censor_time: float = math.inf
    accrual_window: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown scenario kind {self.kind!r}")
        n = tuple(int(x) for x in self.n_per_arm)
        if not n or min(n) < 1:
            raise ValidationError("every arm needs at least one subject")
        object.__setattr__(self, "n_per_arm", n)
        rates = tuple(tuple(float(r) for r in np.atleast_1d(a)) for a in self.rates)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        k = len(n)
        shifted = self.kind in DEFAULT_HR
        if shifted:
            if self.changepoint is None or self.changepoint <= 0:
                raise ValidationError(f"{self.kind} needs a positive changepoint")
            hb, ha = DEFAULT_HR[self.kind]
            object.__setattr__(self, "hr_before", hb if self.hr_before is None else float(self.hr_before))
            object.__setattr__(self, "hr_after", ha if self.hr_after is None else float(self.hr_after))
            if self.hr_before <= 0 or self.hr_after <= 0:
                raise ValidationError("hazard ratios must be positive")
            if len(rates) < 1:
                raise ValidationError("need reference-arm rates")
        elif len(rates) != k:
            raise ValidationError(f"need rates for each of {k} arms")
        nint = len(self.breaks) + 1
        for a in rates:
            if len(a) not in (1, nint):
                raise ValidationError(f"each arm needs 1 or {nint} rates")
            if min(a) <= 0 or not all(math.isfinite(r) for r in a):
                raise ValidationError("rates must be positive and finite")
        if self.breaks and (min(self.breaks) <= 0 or np.any(np.diff(self.breaks) <= 0)):
            raise ValidationError("breaks must be positive and increasing")
        pis = self.cure_fractions
        if pis is None:
            pis = (0.0,) * k
        pis = tuple(float(p) for p in pis)
        if len(pis) != k or any(not 0 <= p <= 1 for p in pis):
            raise ValidationError("cure_fractions: one value in [0, 1] per arm")
        if self.kind != "cure_mixture" and any(pis):
            raise ValidationError("cure fractions apply only to cure_mixture scenarios")
        object.__setattr__(self, "cure_fractions", pis)
        if not self.admin_censor_time > 0:
            raise ValidationError("admin_censor_time must be positive")
        if self.accrual_window is not None and not 0 <= self.accrual_window < self.admin_censor_time:
            raise ValidationError("accrual_window must lie in [0, admin_censor_time)")

    @property
    def n_arms(self) -> int:
        return len(self.n_per_arm)

    def hazard_pieces(self, arm: int) -> tuple[np.ndarray, np.ndarray]:
        """Interval starts (beginning at 0) and hazards for ``arm``."""
        starts = np.concatenate(([0.0], self.breaks))
        base = self.rates[0] if self.kind in DEFAULT_HR else self.rates[arm]
        rates = np.broadcast_to(np.asarray(base, dtype=float), starts.shape).copy()
        if self.kind in DEFAULT_HR and arm > 0:
            t0 = self.changepoint
            if t0 not in starts:
                k = np.searchsorted(starts, t0) - 1
                starts = np.insert(starts, k + 1, t0)
                rates = np.insert(rates, k + 1, rates[k])
            rates = np.where(starts < t0, self.hr_before * rates, self.hr_after * rates)
        return starts, rates

    def cumulative_hazard(self, arm: int, t):
        starts, rates = self.hazard_pieces(arm)
        t = np.asarray(t, dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(starts))))
        k = np.searchsorted(starts, t, side="right") - 1
        return cum[k] + rates[k] * (t - starts[k])

    def hazard(self, arm: int, t):
        starts, rates = self.hazard_pieces(arm)
        return rates[np.searchsorted(starts, np.asarray(t, dtype=float), side="right") - 1]

    def survival(self, arm: int, t):
        pi = self.cure_fractions[arm]
        return pi + (1.0 - pi) * np.exp(-self.cumulative_hazard(arm, t))

    def density(self, arm: int, t):
        pi = self.cure_fractions[arm]
        return (1.0 - pi) * self.hazard(arm, t) * np.exp(-self.cumulative_hazard(arm, t))

    def with_changes(self, **kw) -> "Scenario":
        d = asdict(self)
        d.update(kw)
        return Scenario(**d)


def _inverse_cumhaz(starts, rates, e):
    cum = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(starts))))
    k = np.searchsorted(cum, e, side="right") - 1
    return starts[k] + (e - cum[k]) / rates[k]


def simulate(sc: Scenario) -> SurvivalDataset:
    """Draw one trial; deterministic given ``sc.seed``."""
    times, events, arms = [], [], []
    for a, n in enumerate(sc.n_per_arm):
        rng_t = np.random.Generator(np.random.Philox(np.random.SeedSequence(sc.seed, spawn_key=(a, 0))))
        rng_c = np.random.Generator(np.random.Philox(np.random.SeedSequence(sc.seed, spawn_key=(a, 1))))
        cured = rng_t.random(n) < sc.cure_fractions[a]
        e = rng_t.standard_exponential(n)
        starts, rates = sc.hazard_pieces(a)
        t = np.where(cured, np.inf, _inverse_cumhaz(starts, rates, e))
        c = np.full(n, float(sc.admin_censor_time))
        if sc.accrual_window:
            c = c - rng_c.uniform(0.0, sc.accrual_window, n)
        x = np.minimum(t, c)
        times.append(x)
        events.append(t <= c)
        arms.append(np.full(n, a))
    return SurvivalDataset(np.concatenate(times), np.concatenate(events),
                           np.concatenate(arms), endpoint_label=sc.kind)


@dataclass(frozen=True, eq=False)
class TruthSheet:
    m: float | None
    true_eta: dict[int, float]
    t_grid: np.ndarray
    true_tau: dict[int, np.ndarray]
    true_hazard_crossing: float | None = None


def _true_tau(sc: Scenario, arm: int, t: float, ref: int = 0, tol: float = 1e-6) -> float:
    if t <= 0:
        return 0.0
    cuts = set(sc.breaks)
    if sc.changepoint is not None:
        cuts.add(sc.changepoint)
    edges = [0.0] + sorted(c for c in cuts if c < t) + [t]

    def integrand(u):
        return (sc.survival(arm, u) * sc.density(ref, u)
                - sc.survival(ref, u) * sc.density(arm, u))

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=tol / len(edges), epsrel=1e-10, limit=200)
        total += val
    return float(total)


def truth(sc: Scenario, m: float | None = None, t_grid: Sequence[float] = ()) -> TruthSheet:
    """Analytic milestone survival and numerically integrated tau for each arm vs arm 0."""
    eta = {}
    if m is not None:
        eta = {a: float(sc.survival(a, m)) for a in range(sc.n_arms)}
    grid = np.asarray(t_grid, dtype=float)
    tau = {a: np.array([_true_tau(sc, a, t) for t in grid]) for a in range(1, sc.n_arms)}
    crossing = sc.changepoint if sc.kind in DEFAULT_HR else None
    return TruthSheet(m, eta, grid, tau, crossing)


def pairwise_tau_oracle(view0: ArmView, view1: ArmView, t: float) -> float:
    """Brute-force ``[#{T0 <= t, T0 < T1} - #{T1 <= t, T1 < T0}] / (n0 n1)``."""
    if not (view0.events.all() and view1.events.all()):
        raise CensoredDataUnsupported("pairwise oracle needs uncensored samples")
    t0 = view0.times[:, None]
    t1 = view1.times[None, :]
    win = np.sum((t0 <= t) & (t0 < t1))
    loss = np.sum((t1 <= t) & (t1 < t0))
    return float(win - loss) / (view0.n * view1.n)
