"""Right-continuous piecewise-constant functions on [0, inf).

Every curve-valued estimate in the package (survival curves, tau
processes, smoothed slopes) is carried by :class:`StepFunction`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["StepFunction", "SurvivalCurve", "PiecewiseLinear",
           "integrate", "stieltjes_sum"]


@dataclass(frozen=True, eq=False)
class StepFunction:
    """``f(t) = values[k]`` for the largest ``k`` with ``jump_times[k] <= t``,
    and ``initial_value`` before the first jump.
    """
    jump_times: np.ndarray
    values: np.ndarray
    initial_value: float = 0.0

    def __post_init__(self):
        t = np.array(self.jump_times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if t.shape != v.shape:
            raise ValidationError("jump_times and values must have equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValidationError("jump_times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "initial_value", float(self.initial_value))

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls(np.empty(0), np.empty(0), value)

    def __len__(self):
        return self.jump_times.size

    def __call__(self, t):
        """Right-continuous evaluation (binary search); accepts scalars or arrays."""
        t_arr = np.asarray(t, dtype=float)
        k = np.searchsorted(self.jump_times, t_arr, side="right") - 1
        padded = np.concatenate(([self.initial_value], self.values))
        out = padded[k + 1]
        return float(out) if out.ndim == 0 else out

    eval = __call__

    def left_limit(self, t):
        """``f(t-)``, the value just before ``t``."""
        t_arr = np.asarray(t, dtype=float)
        k = np.searchsorted(self.jump_times, t_arr, side="left") - 1
        padded = np.concatenate(([self.initial_value], self.values))
        out = padded[k + 1]
        return float(out) if out.ndim == 0 else out

    def jumps(self) -> np.ndarray:
        """Signed jump sizes ``f(u) - f(u-)`` at each jump time."""
        return np.diff(np.concatenate(([self.initial_value], self.values)))

    def complement(self) -> "StepFunction":
        """``1 - f``."""
        return StepFunction(self.jump_times, 1.0 - self.values, 1.0 - self.initial_value)

    def truncate(self, t_end: float) -> "StepFunction":
        """Drop jumps after ``t_end`` (the function is then flat from its last kept jump)."""
        keep = self.jump_times <= t_end
        return StepFunction(self.jump_times[keep], self.values[keep], self.initial_value)

    def integrate(self, a: float, b: float) -> float:
        return integrate(self, a, b)

    def cumulative_integral(self, t):
        """``int_0^t f(u) du`` for each entry of ``t`` (exact)."""
        knots = np.concatenate(([0.0], self.jump_times[self.jump_times > 0]))
        level = self(knots)
        cum = np.concatenate(([0.0], np.cumsum(level[:-1] * np.diff(knots))))
        t_arr = np.asarray(t, dtype=float)
        k = np.searchsorted(knots, t_arr, side="right") - 1
        out = cum[k] + level[k] * (t_arr - knots[k])
        return float(out) if out.ndim == 0 else out


class SurvivalCurve(StepFunction):
    """A step function starting at 1, nonincreasing, with values in [0, 1]."""

    def __post_init__(self):
        super().__post_init__()
        if self.initial_value != 1.0:
            raise ValidationError("survival curve must start at 1")
        v = self.values
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ValidationError("survival values must lie in [0, 1]")
        if v.size and np.any(np.diff(np.concatenate(([1.0], v))) > 0):
            raise ValidationError("survival curve must be nonincreasing")

    def cdf(self) -> StepFunction:
        return self.complement()


def integrate(f: StepFunction, a: float, b: float) -> float:
    """Exact ``int_a^b f(u) du`` over the step partition."""
    if not 0 <= a <= b:
        raise ValueError("need 0 <= a <= b")
    if a == b:
        return 0.0
    inner = f.jump_times[(f.jump_times > a) & (f.jump_times < b)]
    knots = np.concatenate(([a], inner, [b]))
    return float(np.sum(f(knots[:-1]) * np.diff(knots)))


def stieltjes_sum(g: StepFunction, dF: StepFunction, t: float) -> float:
    """``sum_{u <= t} g(u) * (F(u) - F(u-))`` over the jumps of ``F``.

    ``g`` is taken at its right-continuous value; mass at ``u == t`` counts.
    """
    mask = dF.jump_times <= t
    u = dF.jump_times[mask]
    if u.size == 0:
        return 0.0
    return float(np.sum(g(u) * dF.jumps()[mask]))


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function given by breakpoints; flat beyond the last one."""
    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=float)
        v = np.array(self.values, dtype=float)
        if k.shape != v.shape or k.size == 0:
            raise ValidationError("knots and values must be nonempty and of equal length")
        if k.size > 1 and not np.all(np.diff(k) > 0):
            raise ValidationError("knots must be strictly increasing")
        k.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.knots, self.values)
        return float(out) if np.ndim(out) == 0 else out
