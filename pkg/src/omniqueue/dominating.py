"""Stationary M/M/c random-assignment dominating process, built backwards.

Under random assignment with Poisson input the c servers are independent
M/M/1 queues with arrival rate lambda/c.  The stationary M/M/1 queue-length
process is reversible, so the path on [T, 0] is obtained by drawing the
queue length at time 0 from its geometric law and running an M/M/1 birth-death
chain forward in reversed time s = -t.  Up-jumps of the reversed chain are
departures of the forward queue; down-jumps are arrivals.

Service durations are read off the path (per-server FCFS).  Jobs still
present at time 0 finish at times given by fresh exponential draws, keyed by
their position in the time-0 queue so that extension never redraws them.

Coupling marks pair the n-th arrival with the n-th service initiation, both
counted over all servers.  Inside a window (T, 0] that is the k-th arrival
with the (q + k)-th initiation after T, q being the number of jobs waiting
(not in service) at T.
"""
from __future__ import annotations

import bisect
import heapq
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

from .queue_core import ArrivalEvent, MarkSequence, Vector, kw_arrival
from .rng import DEFAULT_SEED, Stream


# Holding times and service amounts are rounded to this dyadic grid; sums and
# differences of grid points below 2**12 are then exact in double precision,
# which keeps bit-equality comparisons between coupled processes meaningful.
TICK = 2.0 ** -40


def _on_grid(x: float) -> float:
    return max(round(x / TICK), 1) * TICK


class UnstableQueue(ValueError):
    """lambda >= c mu: no equilibrium exists."""


class InvariantViolation(RuntimeError):
    """Internal consistency of a dominating path failed."""


class EmptyingHorizonExceeded(RuntimeError):
    """No simultaneous empty instant was found within the event cap."""


def check_stable(c: int, lam: float, mu: float) -> None:
    if c < 1:
        raise ValueError(f"server count must be >= 1, got {c!r}")
    if not lam > 0 or not mu > 0:
        raise ValueError("arrival and service rates must be positive")
    if not lam < c * mu:
        raise UnstableQueue(
            f"unstable queue: lambda/(c mu) = {lam / (c * mu):g} >= 1"
        )


@dataclass(frozen=True)
class JobRecord:
    job_id: tuple[int, int]
    server: int
    arrival: float | None  # None: arrived before the window
    initiation: float | None  # None: in service at the window start
    departure: float
    duration: float | None


class _Trace:
    """Reversed-time queue-length path of one server."""

    __slots__ = ("q0", "times", "ups", "levels", "known", "rate_up", "rate_down",
                 "_steps", "_rev", "_fut", "future")

    def __init__(self, q0, rate_up, rate_down, rev: Stream | None, fut: Stream | None):
        self.q0 = q0
        self.times: list[float] = []  # reversed event times s, increasing
        self.ups: list[bool] = []  # True: reversed up-jump (forward departure)
        self.levels: list[int] = []  # chain level after each event
        self.known = 0.0  # path known on [0, known]
        self.rate_up = rate_up
        self.rate_down = rate_down
        self._steps = 0
        self._rev = rev
        self._fut = fut
        self.future: list[float] = []  # cached service amounts after time 0

    def copy(self) -> "_Trace":
        t = _Trace(self.q0, self.rate_up, self.rate_down, self._rev, self._fut)
        t.times = self.times[:]
        t.ups = self.ups[:]
        t.levels = self.levels[:]
        t.known = self.known
        t._steps = self._steps
        t.future = self.future[:]
        return t

    def grow(self, horizon: float) -> None:
        """Simulate the reversed chain until the path is known past ``horizon``."""
        if self.known > horizon:
            return
        if self._rev is None:
            raise InvariantViolation("hand-built trace cannot be extended")
        a, m = self.rate_up, self.rate_down
        s = self.times[-1] if self.times else 0.0
        z = self.levels[-1] if self.levels else self.q0
        rev = self._rev
        j = self._steps
        times, ups, levels = self.times, self.ups, self.levels
        while s <= horizon:
            if z > 0:
                s += _on_grid(-math.log(rev[2 * j]) / (a + m))
                up = rev[2 * j + 1] * (a + m) < a
            else:
                s += _on_grid(-math.log(rev[2 * j]) / a)
                up = True
            j += 1
            z += 1 if up else -1
            times.append(s)
            ups.append(up)
            levels.append(z)
        self._steps = j
        self.known = s

    def future_service(self, p: int) -> float:
        while len(self.future) <= p:
            if self._fut is None:
                raise InvariantViolation("hand-built trace lacks future service amounts")
            self.future.append(_on_grid(self._fut.exponential(len(self.future), self.rate_down)))
        return self.future[p]


@dataclass
class _ServerWindow:
    q_start: int
    arrivals: list
    departures: list  # in FCFS job order; entries past 0 use future draws
    jobs: list


def _server_window(trace: _Trace, server: int, start: float) -> _ServerWindow:
    span = -start
    if trace.known < span:
        raise InvariantViolation("trace does not cover the window")
    n = bisect.bisect_left(trace.times, span)  # events with s < |T|
    q_start = trace.levels[n - 1] if n else trace.q0
    arrivals, departures = [], []
    for idx in range(n - 1, -1, -1):
        t = -trace.times[idx]
        (departures if trace.ups[idx] else arrivals).append(t)
    clock = 0.0
    for p in range(trace.q0):
        clock += trace.future_service(p)
        departures.append(clock)
    if len(departures) != q_start + len(arrivals):
        raise InvariantViolation(
            f"server {server}: {len(departures)} departures for "
            f"{q_start} initial jobs and {len(arrivals)} arrivals"
        )
    jobs = []
    prev_dep = None
    for p, dep in enumerate(departures):
        arr = arrivals[p - q_start] if p >= q_start else None
        if p == 0 and q_start > 0:
            init = None
        elif arr is None:
            init = prev_dep
        elif prev_dep is None:
            init = arr
        else:
            init = max(arr, prev_dep)
        jobs.append(JobRecord((server, p), server, arr, init, dep,
                              None if init is None else dep - init))
        prev_dep = dep
    return _ServerWindow(q_start, arrivals, departures, jobs)


class DominatingPath:
    """A realisation of the stationary M/M/c [RA] queue on [window_start, 0]."""

    def __init__(self, c, lam, mu, window_start, traces, run_id=0, seed=DEFAULT_SEED):
        self.c = c
        self.lam = lam
        self.mu = mu
        self.window_start = window_start
        self.run_id = run_id
        self.seed = seed
        self._traces = traces

    @classmethod
    def build(cls, c: int, lam: float, mu: float, T: float, run_id: int = 0,
              seed: int = DEFAULT_SEED) -> "DominatingPath":
        check_stable(c, lam, mu)
        if not T < 0:
            raise ValueError(f"window start must be negative, got {T!r}")
        traces = _fresh_traces(c, lam, mu, run_id, seed)
        for tr in traces:
            tr.grow(-T)
        return cls(c, lam, mu, T, traces, run_id, seed)

    @classmethod
    def from_reversed_events(cls, c, lam, mu, T, servers) -> "DominatingPath":
        """Hand-built path.  ``servers`` holds, per server, a dict with keys
        ``q0`` (queue length at 0), ``events`` (list of ``(s, up)`` reversed
        events, s increasing), ``future`` (service amounts after 0) and
        optionally ``known`` (how far back the path is specified)."""
        traces = []
        for spec in servers:
            tr = _Trace(spec["q0"], lam / c, mu, None, None)
            z = spec["q0"]
            for s, up in spec.get("events", ()):
                z += 1 if up else -1
                if z < 0:
                    raise ValueError("queue length would go negative")
                tr.times.append(s)
                tr.ups.append(up)
                tr.levels.append(z)
            tr.known = spec.get("known", -T)
            tr.future = list(spec.get("future", ()))
            traces.append(tr)
        return cls(c, lam, mu, T, traces)

    def extend(self, new_T: float) -> "DominatingPath":
        """A new path on [new_T, 0] that agrees with this one on the old window."""
        if not new_T < self.window_start:
            raise ValueError(
                f"new window start {new_T!r} must precede {self.window_start!r}"
            )
        traces = [tr.copy() for tr in self._traces]
        for tr in traces:
            tr.grow(-new_T)
        return DominatingPath(self.c, self.lam, self.mu, new_T, traces, self.run_id, self.seed)

    def restrict(self, T: float) -> "DominatingPath":
        """The same path viewed on the shorter window [T, 0]."""
        if not self.window_start <= T < 0:
            raise ValueError("restriction must shrink the window")
        return DominatingPath(self.c, self.lam, self.mu, T,
                              [tr.copy() for tr in self._traces], self.run_id, self.seed)

    @property
    def rho(self) -> float:
        return self.lam / (self.c * self.mu)

    @cached_property
    def _windows(self) -> list[_ServerWindow]:
        return [_server_window(tr, i, self.window_start) for i, tr in enumerate(self._traces)]

    def jobs(self) -> list[JobRecord]:
        return [job for w in self._windows for job in w.jobs]

    def arrival_times(self) -> list[float]:
        return sorted(t for w in self._windows for t in w.arrivals)

    def queue_length(self, server: int, t: float) -> int:
        """Right-continuous queue length of one server at time ``t``."""
        if not self.window_start <= t <= 0:
            raise ValueError(f"time {t!r} outside the window")
        tr = self._traces[server]
        # Q(t) is the chain level after all reversed events with s < -t
        k = bisect.bisect_left(tr.times, -t)
        return tr.levels[k - 1] if k else tr.q0

    def waiting_at_start(self) -> int:
        return sum(max(w.q_start - 1, 0) for w in self._windows)

    def initiations(self) -> list[tuple[float, float]]:
        """``(initiation time, duration)`` of services started after the
        window start, in initiation order (may run past time 0)."""
        out = [(j.initiation, j.duration) for w in self._windows
               for j in w.jobs if j.initiation is not None]
        out.sort()
        return out

    @cached_property
    def _marks(self) -> MarkSequence:
        arrivals = self.arrival_times()
        inits = self.initiations()
        offset = self.waiting_at_start()
        if len(inits) != offset + len(arrivals):
            raise InvariantViolation(
                f"{len(inits)} initiations cannot cover {offset} waiting jobs "
                f"and {len(arrivals)} arrivals"
            )
        events = tuple(ArrivalEvent(t, inits[offset + k][1]) for k, t in enumerate(arrivals))
        return MarkSequence(self.window_start, events)

    def marks(self) -> MarkSequence:
        return self._marks

    def residual_workloads(self, t: float | None = None) -> Vector:
        """Sorted per-server residual work at time ``t`` (default: window start)."""
        if t is None:
            t = self.window_start
        if not self.window_start <= t <= 0:
            raise ValueError(f"time {t!r} outside the window")
        out = []
        for w in self._windows:
            last = w.q_start + bisect.bisect_right(w.arrivals, t) - 1
            out.append(max(w.departures[last] - t, 0.0) if last >= 0 else 0.0)
        out.sort()
        return tuple(out)

    def in_service_residuals(self) -> Vector:
        """Sorted remaining work of the jobs in service at the window start."""
        out = []
        for w in self._windows:
            out.append(w.departures[0] - self.window_start if w.q_start else 0.0)
        out.sort()
        return tuple(out)

    def waiting_durations(self) -> list[float]:
        """Durations the jobs waiting at the window start receive when they are
        served FCFS: the first ``waiting_at_start()`` initiations after T."""
        return [d for _, d in self.initiations()[: self.waiting_at_start()]]

    def upper_start(self, servers: int | None = None) -> Vector:
        """Initial upper workload vector at T for an FCFS system with
        ``servers`` >= c servers switched on at T.

        Jobs in service keep their residual work; waiting jobs join a single
        FCFS line and are placed by the workload recursion in order, carrying
        the durations of the first initiations after T.
        """
        servers = self.c if servers is None else servers
        if servers < self.c:
            raise ValueError("upper process needs at least c servers")
        w = (0.0,) * (servers - self.c) + self.in_service_residuals()
        for d in self.waiting_durations():
            w = kw_arrival(w, d)[0]
        return w

    def window_events(self) -> list[tuple]:
        """Per-server forward events in the window, for equality checks."""
        return [(w.q_start, tuple(w.arrivals), tuple(w.departures)) for w in self._windows]

    def to_json(self) -> str:
        return json.dumps({
            "schema": "omniqueue.path/1",
            "c": self.c, "lambda": self.lam, "mu": self.mu,
            "window_start": self.window_start,
            "jobs": [
                {"job_id": list(j.job_id), "server": j.server, "arrival": j.arrival,
                 "initiation": j.initiation, "departure": j.departure,
                 "duration": j.duration}
                for j in self.jobs()
            ],
        })


def _fresh_traces(c, lam, mu, run_id, seed) -> list[_Trace]:
    rho = lam / (c * mu)
    init = Stream(seed, run_id, "stationary-init")
    return [
        _Trace(init.geometric(i, rho), lam / c, mu,
               Stream(seed, run_id, f"reversed-path/{i}"),
               Stream(seed, run_id, f"fresh-residuals/{i}"))
        for i in range(c)
    ]


def _emptying_interval(traces, max_events) -> tuple[float, float]:
    """Reversed times (s0, s1): all servers empty on [s0, s1), s0 minimal."""
    horizon = 1.0
    while True:
        for tr in traces:
            tr.grow(horizon)
        if sum(len(tr.times) for tr in traces) > max_events:
            raise EmptyingHorizonExceeded(
                f"no simultaneous empty instant within {max_events} reversed events"
            )
        known = min(tr.known for tr in traces)
        busy = sum(1 for tr in traces if tr.q0 > 0)
        s0 = 0.0 if busy == 0 else None
        merged = heapq.merge(*[zip(tr.times, tr.levels, tr.ups) for tr in traces])
        for s, level, up in merged:
            if s > known:
                break
            if s0 is not None:
                return s0, s
            if up and level == 1:
                busy += 1
            elif not up and level == 0:
                busy -= 1
                if busy == 0:
                    s0 = s
        horizon *= 2


def find_emptying_time(c: int, lam: float, mu: float, run_id: int = 0,
                       seed: int = DEFAULT_SEED, max_events: int = 10**7) -> float:
    """Latest time T* <= 0 before which the dominating process is empty."""
    return build_until_empty(c, lam, mu, run_id, seed, max_events)[1]


def build_until_empty(c, lam, mu, run_id=0, seed=DEFAULT_SEED, max_events=10**7):
    """Return ``(path, T*)`` where the path starts inside the empty period
    immediately preceding T*, so every server is idle at its window start."""
    check_stable(c, lam, mu)
    traces = _fresh_traces(c, lam, mu, run_id, seed)
    s0, s1 = _emptying_interval(traces, max_events)
    path = DominatingPath(c, lam, mu, -(s0 + _on_grid(0.5 * (s1 - s0))), traces, run_id, seed)
    if any(w.q_start for w in path._windows):
        raise InvariantViolation("dominating path not empty at its emptying time")
    return path, -s0
