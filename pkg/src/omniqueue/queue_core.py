"""Kiefer-Wolfowitz workload-vector algebra for multi-server FCFS queues.

A workload vector is a non-decreasing tuple of residual work amounts, one
per server.  Arithmetic is generic over the number type: floats are used by
the samplers, while :class:`fractions.Fraction` inputs give exact results
(handy for hand-checked tables).
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Sequence

Vector = tuple


class InvalidInput(ValueError):
    """Raised when an operation receives an argument outside its domain."""


def _nonneg(x):
    # x - x keeps the numeric type (0.0 for floats, Fraction(0) for fractions)
    return x if x > 0 else x - x


def validate(w: Sequence) -> Vector:
    """Return ``w`` as a tuple after checking the workload-vector invariants."""
    w = tuple(w)
    if len(w) < 1:
        raise InvalidInput("workload vector needs at least one server")
    for a, b in zip(w, w[1:]):
        if b < a:
            raise InvalidInput(f"workload vector not sorted: {w!r}")
    if w[0] < 0:
        raise InvalidInput(f"negative workload coordinate: {w!r}")
    return w


def empty(c: int) -> Vector:
    if c < 1:
        raise InvalidInput("server count must be >= 1")
    return (0.0,) * c


# Test hook: flipping this to True places an arriving job at the highest
# feasible coordinate among ties, breaking the lowest-coordinate convention.
_CORRUPT_TIE_BREAK = False


def kw_arrival(w: Sequence, s) -> tuple[Vector, int]:
    """Add a job of size ``s`` to the least-loaded server and re-sort.

    Returns the new vector and the 1-based position ``k`` of the new job.
    Among equal coordinates the job is placed at the lowest feasible index, so
    the returned vector at ``k`` always exceeds the old vector at ``k``.
    """
    if not s > 0:
        raise InvalidInput(f"service duration must be positive, got {s!r}")
    w = tuple(w)
    new = w[0] + s
    rest = w[1:]
    j = bisect_right(rest, new) if _CORRUPT_TIE_BREAK else bisect_left(rest, new)
    return rest[:j] + (new,) + rest[j:], j + 1


def kw_drain(w: Sequence, dt, work_rate=1) -> Vector:
    """Let every server work for ``dt`` time units at ``work_rate``."""
    if dt < 0:
        raise InvalidInput(f"drain interval must be non-negative, got {dt!r}")
    if not work_rate > 0:
        raise InvalidInput(f"work rate must be positive, got {work_rate!r}")
    if dt == 0:
        return tuple(w)
    amount = dt if work_rate == 1 else work_rate * dt
    return tuple(_nonneg(v - amount) for v in w)


def kw_step(w: Sequence, s, gap, work_rate=1) -> Vector:
    """One step of the Kiefer-Wolfowitz recursion: arrival, then drain."""
    return kw_drain(kw_arrival(w, s)[0], gap, work_rate)


def leq_partial(big: Sequence, small: Sequence) -> bool:
    """Cross-dimension order: the ``len(small)`` busiest servers of ``big``
    each hold no more work than the matching server of ``small``."""
    m = len(big) - len(small)
    if m < 0:
        raise InvalidInput("first vector must have at least as many servers as the second")
    return all(big[k + m] <= small[k] for k in range(len(small)))


def leq_coordinatewise(a: Sequence, b: Sequence) -> bool:
    if len(a) != len(b):
        raise InvalidInput("vectors have different lengths")
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class ArrivalEvent:
    time: float
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidInput(f"service duration must be positive, got {self.duration!r}")


@dataclass(frozen=True)
class MarkSequence:
    """Arrival times with coupled service durations on the window (start, 0]."""

    window_start: float
    events: tuple[ArrivalEvent, ...] = ()

    def __post_init__(self):
        events = tuple(
            e if isinstance(e, ArrivalEvent) else ArrivalEvent(*e) for e in self.events
        )
        object.__setattr__(self, "events", events)
        prev = self.window_start
        for e in events:
            if not e.time > prev:
                raise InvalidInput(
                    f"arrival times must be strictly increasing and after {self.window_start!r}"
                )
            prev = e.time
        if events and events[-1].time > 0:
            raise InvalidInput("arrival times must not exceed 0")

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self) -> list:
        return [e.time for e in self.events]

    @property
    def durations(self) -> list:
        return [e.duration for e in self.events]

    def restrict(self, start) -> "MarkSequence":
        """Marks in the shorter window (start, 0]."""
        if start < self.window_start:
            raise InvalidInput("restriction must not enlarge the window")
        i = bisect_right([e.time for e in self.events], start)
        return MarkSequence(start, self.events[i:])


@dataclass
class Trajectory:
    """Event-indexed record of a workload process.

    ``before[i]`` and ``after[i]`` are the states just before and just after
    the i-th arrival; between events the state drains linearly.
    """

    start: float
    end: float
    initial: Vector
    times: list = field(default_factory=list)
    before: list = field(default_factory=list)
    after: list = field(default_factory=list)
    work_rate: float = 1

    @property
    def final(self) -> Vector:
        return self.at(self.end)

    def at(self, t) -> Vector:
        """State at time ``t`` (right-continuous: includes an arrival at t)."""
        if t < self.start or t > self.end:
            raise InvalidInput(f"time {t!r} outside [{self.start!r}, {self.end!r}]")
        i = bisect_right(self.times, t)
        if i == 0:
            return kw_drain(self.initial, t - self.start, self.work_rate)
        return kw_drain(self.after[i - 1], t - self.times[i - 1], self.work_rate)

    def left_limit(self, t) -> Vector:
        """State at ``t-``."""
        if t <= self.start or t > self.end:
            raise InvalidInput(f"left limit undefined at {t!r}")
        i = bisect_left(self.times, t)
        if i == 0:
            return kw_drain(self.initial, t - self.start, self.work_rate)
        return kw_drain(self.after[i - 1], t - self.times[i - 1], self.work_rate)


def evolve(w0: Sequence, marks, start, end, work_rate=1) -> Trajectory:
    """Run the workload vector from ``w0`` at ``start`` through ``marks`` up to ``end``.

    ``marks`` is any iterable of ``(time, duration)`` pairs (or
    :class:`ArrivalEvent`) with times in ``(start, end]``.
    """
    if not start < end:
        raise InvalidInput("evolve needs start < end")
    w = validate(w0)
    traj = Trajectory(start, end, w, work_rate=work_rate)
    clock = start
    for ev in marks:
        t, s = (ev.time, ev.duration) if isinstance(ev, ArrivalEvent) else ev
        if not (start < t <= end) or t < clock:
            raise InvalidInput(f"mark at {t!r} outside window ({start!r}, {end!r}] or out of order")
        w = kw_drain(w, t - clock, work_rate)
        traj.times.append(t)
        traj.before.append(w)
        w = kw_arrival(w, s)[0]
        traj.after.append(w)
        clock = t
    return traj


def run_to(w0: Sequence, marks, start, end, work_rate=1) -> Vector:
    """Final state of :func:`evolve` without keeping the trajectory."""
    w = tuple(w0)
    clock = start
    for ev in marks:
        t, s = (ev.time, ev.duration) if isinstance(ev, ArrivalEvent) else ev
        w = kw_drain(w, t - clock, work_rate)
        w = kw_arrival(w, s)[0]
        clock = t
    return kw_drain(w, end - clock, work_rate)
