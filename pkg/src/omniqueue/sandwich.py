"""Upper/lower sandwiching processes and the incremental coalescence tracker.

The tracker ``C`` is kept in work units: it always equals the upper workload
at the highest disagreeing coordinate (0 once the pair has coalesced), so the
time left until coalescence, absent further arrivals, is ``C / work_rate``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .queue_core import (
    InvalidInput,
    MarkSequence,
    Vector,
    _nonneg,
    kw_arrival,
    kw_drain,
    validate,
)


def top_disagreement(u: Vector, l: Vector) -> int:
    """Largest 1-based index where ``u`` and ``l`` differ, or 0."""
    for k in range(len(u) - 1, -1, -1):
        if u[k] != l[k]:
            return k + 1
    return 0


def recompute_C(u, l):
    """Direct evaluation: max of ``u`` over coordinates where ``u != l``."""
    if len(u) != len(l):
        raise InvalidInput("upper and lower vectors differ in length")
    n = top_disagreement(u, l)
    return u[n - 1] if n else u[0] - u[0]


@dataclass(frozen=True)
class SandwichState:
    U: Vector
    L: Vector
    clock: float
    C: float
    coalesced_at: float | None = None
    violations: tuple = ()
    work_rate: float = 1

    @property
    def agreement(self) -> frozenset:
        return frozenset(k + 1 for k, (a, b) in enumerate(zip(self.U, self.L)) if a == b)

    @property
    def n(self) -> int:
        return top_disagreement(self.U, self.L)

    @property
    def coalesced(self) -> bool:
        return self.coalesced_at is not None

    @property
    def time_to_coalescence(self):
        return self.C if self.work_rate == 1 else self.C / self.work_rate


def init_pair(residuals, c: int, clock=0.0, work_rate=1) -> SandwichState:
    """Upper process from ``residuals``, lower process empty."""
    u = tuple(sorted(residuals))
    if len(u) != c:
        raise InvalidInput(f"expected {c} residual workloads, got {len(u)}")
    validate(u)
    l = tuple(v - v for v in u)
    C = recompute_C(u, l)
    return SandwichState(u, l, clock, C, clock if not C > 0 else None, (), work_rate)


def advance(state: SandwichState, dt) -> SandwichState:
    """Drain both processes for ``dt`` with no arrival in between."""
    if dt < 0:
        raise InvalidInput("cannot advance by a negative interval")
    if dt == 0:
        return state
    r = state.work_rate
    u = kw_drain(state.U, dt, r)
    l = kw_drain(state.L, dt, r)
    clock = state.clock + dt
    if state.coalesced:
        return replace(state, U=u, L=l, clock=clock)
    amount = dt if r == 1 else r * dt
    if state.C > amount:
        return replace(state, U=u, L=l, clock=clock, C=state.C - amount)
    hit = state.clock + state.time_to_coalescence
    return replace(state, U=u, L=l, clock=clock, C=_nonneg(state.C - amount),
                   coalesced_at=hit)


def apply_arrival(state: SandwichState, s) -> SandwichState:
    """Feed one arrival of size ``s`` at the current clock to both processes."""
    u0, l0 = state.U, state.L
    u, _ = kw_arrival(u0, s)
    l, _ = kw_arrival(l0, s)
    violations = state.violations
    if u0[0] == l0[0]:
        C = state.C
        if u0[0] > 0:
            violations = violations + (state.clock,)
    else:
        C = max(state.C, u0[0] + s)
    return replace(state, U=u, L=l, C=C, violations=violations)


@dataclass
class RunTranscript:
    T: float
    marks: MarkSequence
    c: int
    coalesced_at: float | None
    violations: tuple
    final_upper: Vector
    final_lower: Vector
    initial_upper: Vector
    work_rate: float = 1
    # (time, U-, L-, C-, U+, L+, C+) per arrival, when recorded
    snapshots: list = field(default_factory=list)

    @property
    def coalesced(self) -> bool:
        return self.coalesced_at is not None

    @property
    def condition_satisfied(self) -> bool:
        return check_theorem_condition(self)

    @property
    def provisional(self) -> bool:
        return self.coalesced_at is None


def run_window(residuals, marks: MarkSequence, c: int, work_rate=1, end=0.0,
               record: bool = False) -> RunTranscript:
    """Evolve the sandwich pair from ``marks.window_start`` to ``end``."""
    T = marks.window_start
    state = init_pair(residuals, c, T, work_rate)
    snaps = []
    for ev in marks.events:
        if ev.time > end:
            break
        state = advance(state, ev.time - state.clock)
        before = state
        state = apply_arrival(state, ev.duration)
        if record:
            snaps.append((ev.time, before.U, before.L, before.C, state.U, state.L, state.C))
    state = advance(state, end - state.clock)
    return RunTranscript(T, marks, c, state.coalesced_at, state.violations,
                         state.U, state.L, tuple(sorted(residuals)), work_rate, snaps)


def check_theorem_condition(transcript: RunTranscript) -> bool:
    """True iff every arrival up to the coalescence time that found the lowest
    coordinates in agreement found them both empty.

    Without coalescence the whole window is checked; callers should treat
    that answer as provisional.
    """
    limit = transcript.coalesced_at
    return not any(limit is None or tau <= limit for tau in transcript.violations)


def every_arrival_finds_idle_lower(transcript: RunTranscript) -> bool:
    """Stronger diagnostic: no arrival up to coalescence waits in the lower
    process (each finds L(1) = 0).  Requires ``record=True``."""
    limit = transcript.coalesced_at
    return all(l[0] == 0 for t, _, l, *_ in transcript.snapshots
               if limit is None or t <= limit)
