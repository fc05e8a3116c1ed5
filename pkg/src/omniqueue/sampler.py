"""Perfect samplers for the equilibrium Kiefer-Wolfowitz vector of M/M/c FCFS.

* :func:`algorithm2_sample` -- sandwiching with binary backoff.
* :func:`omnithermal_sample` -- one dominating realisation serves every
  server count c + m and every work-rate scaling beta.
* :func:`algorithm1_sample` -- waits for the dominating process to empty;
  slow, but an independent check on the other two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import queue_core as qc
from .dominating import DominatingPath, build_until_empty, check_stable
from .rng import DEFAULT_SEED
from .sandwich import RunTranscript, check_theorem_condition, run_window


class SamplerAborted(RuntimeError):
    """A run hit its doubling cap; it is discarded, never truncated."""


@dataclass(frozen=True)
class QueueSpec:
    c: int
    lam: float
    mu: float
    m_list: tuple = (0,)
    beta_list: tuple = ()
    t0: float = -1.0
    max_doublings: int = 40
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        check_stable(self.c, self.lam, self.mu)
        m_list = tuple(int(m) for m in self.m_list)
        if any(m < 0 for m in m_list) or list(m_list) != sorted(set(m_list)):
            raise ValueError(f"m_list must be sorted, distinct and non-negative: {m_list!r}")
        beta_list = tuple(float(b) for b in self.beta_list)
        if any(not 0 < b <= 1 for b in beta_list):
            raise ValueError(f"beta values must lie in (0, 1]: {beta_list!r}")
        if not self.t0 < 0:
            raise ValueError("initial backoff t0 must be negative")
        if self.max_doublings < 0:
            raise ValueError("max_doublings must be non-negative")
        object.__setattr__(self, "m_list", m_list)
        object.__setattr__(self, "beta_list", beta_list)


@dataclass
class SampleRecord:
    run_id: int
    samples: dict  # m -> workload vector of length c + m
    betas: dict = field(default_factory=dict)  # beta -> workload vector of length c
    T: float = 0.0
    Tc: float | None = None
    initial_T: float = 0.0
    doublings_coalesce: int = 0
    doublings_condition: int = 0

    @property
    def condition_was_extended(self) -> bool:
        return self.doublings_condition > 0


def _window(path: DominatingPath, c: int, work_rate=1, record=False) -> RunTranscript:
    return run_window(path.upper_start(), path.marks(), c, work_rate, record=record)


def algorithm2_sample(spec: QueueSpec, run_id: int, record: bool = False):
    """Double the backoff until the sandwich pair coalesces by time 0.

    Returns ``(transcript, path, doublings)``.
    """
    path = DominatingPath.build(spec.c, spec.lam, spec.mu, spec.t0, run_id, spec.seed)
    doublings = 0
    while True:
        tr = _window(path, spec.c, record=record)
        if tr.coalesced:
            return tr, path, doublings
        if doublings >= spec.max_doublings:
            raise SamplerAborted(
                f"run {run_id}: no coalescence after {doublings} doublings (T = {path.window_start:g})"
            )
        path = path.extend(2 * path.window_start)
        doublings += 1


def omnithermal_draw(spec: QueueSpec, run_id: int, record: bool = False):
    """Steps 1(i)-(ii): returns ``(transcript, path, d_coalesce, d_condition)``
    with the monotonicity condition satisfied on [T, T^c]."""
    tr, path, d_co = algorithm2_sample(spec, run_id, record)
    d_cond = 0
    while not check_theorem_condition(tr):
        if d_co + d_cond >= spec.max_doublings:
            raise SamplerAborted(
                f"run {run_id}: condition unmet after {d_cond} extra doublings"
            )
        path = path.extend(2 * path.window_start)
        d_cond += 1
        tr = _window(path, spec.c, record=record)
        if not tr.coalesced:
            raise AssertionError(f"run {run_id}: extended sandwich failed to coalesce")
    return tr, path, d_co, d_cond


def lower_at_zero(marks: qc.MarkSequence, servers: int, work_rate=1) -> qc.Vector:
    return qc.run_to(qc.empty(servers), marks.events, marks.window_start, 0.0, work_rate)


def omnithermal_sample(spec: QueueSpec, run_id: int) -> SampleRecord:
    tr, path, d_co, d_cond = omnithermal_draw(spec, run_id)
    marks = path.marks()
    samples = {m: lower_at_zero(marks, spec.c + m) for m in spec.m_list}
    betas = {b: lower_at_zero(marks, spec.c, 1 / b) for b in spec.beta_list}
    return SampleRecord(run_id, samples, betas, path.window_start, tr.coalesced_at,
                        spec.t0, d_co, d_cond)


def upper_run(path: DominatingPath, servers: int, work_rate=1) -> RunTranscript:
    """Sandwich pair for ``servers`` >= c, the upper one loaded with the
    dominating residuals at T (extra servers start idle)."""
    return run_window(path.upper_start(servers), path.marks(), servers, work_rate)


def verify_upper_coalesced(transcript: RunTranscript, path: DominatingPath, m: int) -> bool:
    """Test-only: build U^{c+m} explicitly and compare with L^{c+m} at time 0."""
    tr = upper_run(path, transcript.c + m)
    return tr.final_upper == tr.final_lower and tr.coalesced


def algorithm1_sample(spec: QueueSpec, run_id: int, max_events: int = 10**7) -> SampleRecord:
    """Start every FCFS system from empty at the dominating emptying time."""
    path, t_star = build_until_empty(spec.c, spec.lam, spec.mu, run_id, spec.seed, max_events)
    marks = path.marks()
    samples = {m: lower_at_zero(marks, spec.c + m) for m in spec.m_list}
    betas = {b: lower_at_zero(marks, spec.c, 1 / b) for b in spec.beta_list}
    return SampleRecord(run_id, samples, betas, t_star, None, t_star)
