"""Subject-level survival data: containers, CSV ingestion and per-arm views."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (EmptyArm, EmptyData, InvalidEvent, MissingColumn,
                     NegativeTime, NonNumericTime, ValidationError)

__all__ = ["Subject", "SurvivalDataset", "ArmView", "CsvSchema",
           "load_csv", "read_csv_text", "write_csv", "split_by_arm"]


@dataclass(frozen=True)
class Subject:
    time: float
    event: bool
    arm: int


@dataclass(frozen=True)
class CsvSchema:
    """Column names for :func:`load_csv`.

    ``reference`` optionally pins the arm label that becomes arm 0.
    """
    time: str = "time"
    event: str = "event"
    arm: str = "arm"
    reference: str | None = None


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class SurvivalDataset:
    """Right-censored multi-arm trial data.

    Parameters
    ----------
    time : array_like
        Observed times ``min(T, C)``; finite and nonnegative.
    event : array_like of bool
        ``True`` if the event was observed, ``False`` if right-censored.
    arm : array_like of int
        Dense arm identifiers ``0..K-1``; arm 0 is the reference.
    arm_labels : sequence of str, optional
        Original label of each arm id. Defaults to ``str(id)``.
    endpoint_label : str
        Free text such as ``"OS"`` or ``"PFS"``.
    """

    def __init__(self, time, event, arm, arm_labels: Sequence[str] | None = None,
                 endpoint_label: str = ""):
        time = np.asarray(time, dtype=float)
        event = np.asarray(event)
        arm = np.asarray(arm)
        if not (time.shape == event.shape == arm.shape) or time.ndim != 1:
            raise ValidationError("time, event and arm must be 1-d and of equal length")
        if time.size == 0:
            raise EmptyData("dataset has no subjects")
        bad = np.flatnonzero(~np.isfinite(time))
        if bad.size:
            raise NonNumericTime(int(bad[0]) + 1, time[bad[0]])
        bad = np.flatnonzero(time < 0)
        if bad.size:
            raise NegativeTime(int(bad[0]) + 1, time[bad[0]])
        if event.dtype != bool:
            ok = np.isin(event, (0, 1))
            if not ok.all():
                k = int(np.flatnonzero(~ok)[0])
                raise InvalidEvent(k + 1, event[k])
            event = event.astype(bool)
        if not np.issubdtype(arm.dtype, np.integer):
            if not np.all(np.equal(np.mod(arm, 1), 0)):
                raise ValidationError("arm identifiers must be integers")
            arm = arm.astype(np.int64)
        n_arms = int(arm.max()) + 1 if arm.size else 0
        if arm.min() < 0:
            raise ValidationError("arm identifiers must be nonnegative")
        counts = np.bincount(arm, minlength=n_arms)
        if (counts == 0).any():
            missing = int(np.flatnonzero(counts == 0)[0])
            raise EmptyArm(f"arm {missing} has no subjects")
        if arm_labels is None:
            arm_labels = [str(k) for k in range(n_arms)]
        arm_labels = tuple(str(x) for x in arm_labels)
        if len(arm_labels) != n_arms:
            raise ValidationError(
                f"{len(arm_labels)} arm labels given for {n_arms} arms")
        if len(set(arm_labels)) != n_arms:
            raise ValidationError("arm labels must be distinct")
        self._time = _frozen(time, float)
        self._event = _frozen(event, bool)
        self._arm = _frozen(arm, np.int64)
        self._labels = arm_labels
        self.endpoint_label = endpoint_label

    @classmethod
    def from_subjects(cls, subjects: Iterable[Subject], **kw) -> "SurvivalDataset":
        subjects = list(subjects)
        return cls([s.time for s in subjects], [bool(s.event) for s in subjects],
                   [s.arm for s in subjects], **kw)

    @property
    def time(self) -> np.ndarray:
        return self._time

    @property
    def event(self) -> np.ndarray:
        return self._event

    @property
    def arm(self) -> np.ndarray:
        return self._arm

    @property
    def arms(self) -> tuple[int, ...]:
        return tuple(range(len(self._labels)))

    @property
    def arm_labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def subjects(self) -> list[Subject]:
        return [Subject(float(t), bool(e), int(a))
                for t, e, a in zip(self._time, self._event, self._arm)]

    def arm_sizes(self) -> dict[int, int]:
        return {k: int(c) for k, c in enumerate(np.bincount(self._arm))}

    def __len__(self):
        return self._time.size

    def __eq__(self, other):
        if not isinstance(other, SurvivalDataset):
            return NotImplemented
        return (np.array_equal(self._time, other._time)
                and np.array_equal(self._event, other._event)
                and np.array_equal(self._arm, other._arm)
                and self._labels == other._labels)

    __hash__ = None

    def __repr__(self):
        sizes = ", ".join(f"{self._labels[k]}={n}" for k, n in self.arm_sizes().items())
        return f"SurvivalDataset(n={len(self)}, arms: {sizes})"


@dataclass(frozen=True, eq=False)
class ArmView:
    """One arm's observations sorted by time, events before censorings at ties."""
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.events, dtype=bool)
        if t.shape != e.shape or t.ndim != 1:
            raise ValidationError("times and events must be 1-d and of equal length")
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise ValidationError("ArmView times must be sorted")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", e)

    @classmethod
    def from_unsorted(cls, times, events) -> "ArmView":
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        order = np.lexsort((~events, times))
        return cls(times[order], events[order])

    @property
    def n(self) -> int:
        return self.times.size


def split_by_arm(ds: SurvivalDataset) -> dict[int, ArmView]:
    """Partition a dataset into sorted per-arm views, keyed by arm id."""
    out = {}
    for k in ds.arms:
        mask = ds.arm == k
        out[k] = ArmView.from_unsorted(ds.time[mask], ds.event[mask])
    return out


ARM_ORDER_DIRECTIVE = "# arm-order:"


def _parse_labels(raw: list[str], reference: str | None,
                  declared: list[str] | None = None) -> tuple[list[int], list[str]]:
    if declared is not None:
        missing = set(raw) - set(declared)
        if missing:
            raise ValidationError(f"arm labels {sorted(missing)} not in the declared arm order")
        order = [lab for lab in declared if lab in set(raw)]
        return _pin_reference(raw, order, reference)
    try:
        as_int = [int(x) for x in raw]
    except ValueError:
        as_int = None
    if as_int is not None:
        order = [str(v) for v in sorted(set(as_int))]
        raw = [str(v) for v in as_int]
    else:
        order = list(dict.fromkeys(raw))
    return _pin_reference(raw, order, reference)


def _pin_reference(raw, order, reference):
    if reference is not None:
        reference = str(reference)
        if reference not in order:
            raise ValidationError(f"reference arm {reference!r} not present in data")
        order.remove(reference)
        order.insert(0, reference)
    index = {lab: k for k, lab in enumerate(order)}
    return [index[x] for x in raw], order


def read_csv_text(text: str, schema: CsvSchema | Mapping | None = None,
                  endpoint_label: str = "") -> SurvivalDataset:
    """Parse CSV text; see :func:`load_csv`."""
    if schema is None:
        schema = CsvSchema()
    elif isinstance(schema, Mapping):
        schema = CsvSchema(**schema)
    declared = None
    for ln in text.splitlines():
        if ln.startswith(ARM_ORDER_DIRECTIVE):
            declared = next(csv.reader([ln[len(ARM_ORDER_DIRECTIVE):].strip()]), [])
            break
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines())
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise EmptyData("file is empty")
    reader = csv.reader(io.StringIO("\n".join(ln for _, ln in lines)))
    rows = list(reader)
    header = [h.strip() for h in rows[0]]
    cols = {}
    for key in ("time", "event", "arm"):
        name = getattr(schema, key)
        if name not in header:
            raise MissingColumn(f"column {name!r} not found in header {header}")
        cols[key] = header.index(name)
    if len(rows) == 1:
        raise EmptyData("file has a header but no data rows")
    times, events, arms = [], [], []
    for (lineno, _), row in zip(lines[1:], rows[1:]):
        try:
            tv = row[cols["time"]].strip()
            ev = row[cols["event"]].strip()
            av = row[cols["arm"]].strip()
        except IndexError:
            raise ValidationError(f"line {lineno}: too few fields") from None
        try:
            t = float(tv)
        except ValueError:
            raise NonNumericTime(lineno, tv) from None
        if not math.isfinite(t):
            raise NonNumericTime(lineno, tv)
        if t < 0:
            raise NegativeTime(lineno, tv)
        try:
            e = float(ev)
        except ValueError:
            raise InvalidEvent(lineno, ev) from None
        if e not in (0.0, 1.0):
            raise InvalidEvent(lineno, ev)
        if av == "":
            raise ValidationError(f"line {lineno}: empty arm label")
        times.append(t)
        events.append(e == 1.0)
        arms.append(av)
    arm_ids, labels = _parse_labels(arms, schema.reference, declared)
    return SurvivalDataset(times, events, arm_ids, arm_labels=labels,
                           endpoint_label=endpoint_label)


def load_csv(path: str | os.PathLike, schema: CsvSchema | Mapping | None = None,
             endpoint_label: str = "") -> SurvivalDataset:
    """Load a subject-level CSV file.

    The file needs a header row; lines starting with ``#`` are skipped.
    Events are coded 1 (observed) / 0 (censored). Integer arm labels are
    mapped to dense ids in numeric order, other labels by first appearance,
    unless a ``# arm-order: A,B,...`` line fixes the order (as written by
    :func:`write_csv`); ``schema.reference`` moves one label to arm 0. The label of each id is
    kept in :attr:`SurvivalDataset.arm_labels`.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return read_csv_text(text, schema, endpoint_label)


def write_csv(ds: SurvivalDataset, path: str | os.PathLike | None = None) -> str:
    """Write ``ds`` with columns ``time,event,arm`` (arm as its label).

    Returns the CSV text; also writes it to ``path`` when given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labels = ds.arm_labels
    if list(labels) != [str(k) for k in range(len(labels))]:
        order = io.StringIO()
        csv.writer(order, lineterminator="").writerow(labels)
        buf.write(f"{ARM_ORDER_DIRECTIVE} {order.getvalue()}\n")
    w.writerow(["time", "event", "arm"])
    for t, e, a in zip(ds.time, ds.event, ds.arm):
        w.writerow([repr(float(t)), int(e), labels[a]])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
