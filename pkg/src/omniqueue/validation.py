"""Self-check suites shared by ``omniqueue validate`` and the test-suite.

Each suite returns a :class:`SuiteResult`; on failure ``counterexample``
carries a full state dump of the first offending case.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction as F

from . import queue_core as qc
from .analytics import ks_two_sample
from .sampler import (
    QueueSpec,
    algorithm1_sample,
    algorithm2_sample,
    omnithermal_draw,
    omnithermal_sample,
    upper_run,
)
from .sandwich import (
    advance,
    apply_arrival,
    init_pair,
    recompute_C,
    run_window,
)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    detail: str = ""
    counterexample: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" -- {self.detail}" if self.detail else ""
        return f"[{status}] {self.name} ({self.checked} checks){extra}"


# Worked example: three arrivals fed to two-, three- and four-server sandwiches
# started at time 0 with one unit of residual work.
EXAMPLE_MARKS = ((F("0.1"), F("1.2")), (F("0.3"), F("1.8")), (F("0.8"), F(5)))
EXAMPLE_TIMES = (F(0), F("0.1"), F("0.3"), F("0.8"))


def _v(*xs):
    return tuple(F(x) for x in xs)


EXAMPLE_TABLE = {
    ("U", 2): (_v(0, 1), _v("0.9", "1.2"), _v(1, "2.5"), _v(2, "5.5")),
    ("L", 2): (_v(0, 0), _v(0, "1.2"), _v(1, "1.8"), _v("1.3", "5.5")),
    ("U", 3): (_v(0, 0, 1), _v(0, "0.9", "1.2"), _v("0.7", 1, "1.8"), _v("0.5", "1.3", "5.2")),
    ("L", 3): (_v(0, 0, 0), _v(0, 0, "1.2"), _v(0, 1, "1.8"), _v("0.5", "1.3", 5)),
    ("U", 4): (_v(0, 0, 0, 1), _v(0, 0, "0.9", "1.2"), _v(0, "0.7", 1, "1.8"),
               _v("0.2", "0.5", "1.3", 5)),
    ("L", 4): (_v(0, 0, 0, 0), _v(0, 0, 0, "1.2"), _v(0, 0, 1, "1.8"), _v(0, "0.5", "1.3", 5)),
}

EXAMPLE_HORIZON = F("2.8")


def example_initial(kind: str, c: int):
    zeros = (F(0),) * c
    return zeros[:-1] + (F(1),) if kind == "U" else zeros


def example_marks(shift=F(-3)) -> qc.MarkSequence:
    """The example's arrivals moved into a window (shift, 0]."""
    return qc.MarkSequence(shift, tuple(qc.ArrivalEvent(t + shift, s) for t, s in EXAMPLE_MARKS))


def golden_example() -> SuiteResult:
    checked = 0
    for (kind, c), row in EXAMPLE_TABLE.items():
        traj = qc.evolve(example_initial(kind, c), EXAMPLE_MARKS, F(0), EXAMPLE_HORIZON)
        got = (traj.initial,) + tuple(traj.after)
        for t, want, have in zip(EXAMPLE_TIMES, row, got):
            checked += 1
            if want != have:
                return SuiteResult("golden example", False, checked,
                                   f"cell {kind}^{c} at t={t} mismatch",
                                   {"cell": f"{kind}^{c}(t={t})", "expected": [str(x) for x in want],
                                    "got": [str(x) for x in have]})
    shift = F(-3)
    marks = example_marks(shift)
    end = EXAMPLE_HORIZON + shift
    outcomes = {}
    for c in (2, 3, 4):
        tr = run_window(example_initial("U", c), marks, c, end=end)
        outcomes[c] = None if tr.coalesced_at is None else tr.coalesced_at - shift
    checked += 3
    ok = outcomes[2] == EXAMPLE_HORIZON and outcomes[3] is None and outcomes[4] is not None
    if not ok:
        return SuiteResult("golden example", False, checked, "coalescence outcomes differ",
                           {"coalescence": {c: str(v) for c, v in outcomes.items()}})
    return SuiteResult("golden example", True, checked)


def _random_marks(rng: random.Random, n: int, lattice: bool, start=0.0):
    t = start
    out = []
    for _ in range(n):
        if lattice:
            t += rng.randint(1, 8) * 0.25
            s = rng.randint(1, 16) * 0.25
        else:
            t += rng.expovariate(1.0)
            s = rng.expovariate(rng.uniform(0.3, 2.0))
        out.append((t, s))
    return out


def _random_vector(rng: random.Random, c: int, lattice: bool):
    if lattice:
        return tuple(sorted(rng.randint(0, 12) * 0.25 for _ in range(c)))
    return tuple(sorted(rng.choice((0.0, rng.expovariate(0.5))) for _ in range(c)))


def tracker_equivalence(min_events: int = 100_000, seed: int = 1) -> SuiteResult:
    """Incremental tracker against direct evaluation after every event."""
    rng = random.Random(seed)
    events = 0
    config = 0
    while events < min_events:
        config += 1
        c = rng.randint(1, 8)
        lattice = config % 2 == 0
        state = init_pair(_random_vector(rng, c, lattice), c, 0.0)
        for t, s in _random_marks(rng, rng.randint(5, 60), lattice):
            for step in ("advance", "arrival"):
                if step == "advance":
                    state = advance(state, t - state.clock)
                else:
                    # the tracker rule relies on the new job landing strictly
                    # above the old value at its insertion index
                    u_next, k = qc.kw_arrival(state.U, s)
                    if not u_next[k - 1] > state.U[k - 1]:
                        return SuiteResult(
                            "tracker equivalence", False, events,
                            f"config {config}: job of size {s!r} inserted at tied index {k}",
                            {"U-": state.U, "U": u_next, "k": k, "clock": state.clock})
                    state = apply_arrival(state, s)
                direct = recompute_C(state.U, state.L)
                if state.C != direct or not qc.leq_coordinatewise(state.L, state.U):
                    return SuiteResult(
                        "tracker equivalence", False, events,
                        f"config {config}: incremental C={state.C!r} direct C={direct!r}",
                        {"U": state.U, "L": state.L, "C": state.C, "clock": state.clock})
            events += 1
    return SuiteResult("tracker equivalence", True, events)


def order_preservation(cases: int = 10_000, seed: int = 2) -> SuiteResult:
    """Cross-dimension order survives shared arrivals."""
    rng = random.Random(seed)
    for case in range(cases):
        c, m = rng.randint(1, 6), rng.randint(1, 5)
        lattice = case % 2 == 0
        small = _random_vector(rng, c, lattice)
        big = tuple(sorted(_random_vector(rng, m, lattice)
                           + tuple(x * rng.choice((1.0, 0.5, 0.0)) for x in small)))
        if not qc.leq_partial(big, small):
            continue
        marks = _random_marks(rng, rng.randint(1, 30), lattice)
        a = qc.evolve(small, marks, 0.0, marks[-1][0] + 5.0)
        b = qc.evolve(big, marks, 0.0, marks[-1][0] + 5.0)
        pairs = list(zip(a.before, b.before)) + list(zip(a.after, b.after)) + [(a.final, b.final)]
        for x, y in pairs:
            if not qc.leq_partial(y, x):
                return SuiteResult("order preservation", False, case,
                                   "order lost", {"small": small, "big": big, "marks": marks})
    return SuiteResult("order preservation", True, cases)


MONOTONE_CONFIGS = ((2, 1.2, 1.0), (3, 2.4, 1.0), (10, 10.0, 2.0))


def monotone_termination(runs: int = 10_000, ms=(1, 2, 5), seed: int = 7) -> SuiteResult:
    """Accepted omnithermal runs: every c+m upper process has met its lower
    one by time 0, no later than the c-server pair."""
    checks = 0
    for r in range(runs):
        c, lam, mu = MONOTONE_CONFIGS[r % len(MONOTONE_CONFIGS)]
        tr, path, *_ = omnithermal_draw(QueueSpec(c, lam, mu, seed=seed), r)
        for m in ms:
            big = upper_run(path, c + m)
            checks += 1
            ok = (big.coalesced and big.final_upper == big.final_lower
                  and big.coalesced_at <= tr.coalesced_at)
            if not ok:
                return SuiteResult("monotone termination", False, checks,
                                   f"run {r}, m={m}",
                                   {"run_id": r, "c": c, "m": m, "Tc": tr.coalesced_at,
                                    "Tcm": big.coalesced_at, "U": big.final_upper,
                                    "L": big.final_lower})
    return SuiteResult("monotone termination", True, checks, f"{runs} accepted runs")


def funnel(runs: int = 1000, seed: int = 11) -> SuiteResult:
    """Sandwiches from T and 2T on one path stay nested on [T, 0]."""
    checks = 0
    for r in range(runs):
        c, lam, mu = MONOTONE_CONFIGS[r % len(MONOTONE_CONFIGS)]
        tr, path, _ = algorithm2_sample(QueueSpec(c, lam, mu, seed=seed), r, record=True)
        T = path.window_start
        longer = path.extend(2 * T)
        tr2 = run_window(longer.upper_start(), longer.marks(), c, record=True)
        early = [e for e in longer.marks().events if e.time <= T]
        u_t = qc.run_to(longer.upper_start(), early, 2 * T, T)
        l_t = qc.run_to(qc.empty(c), early, 2 * T, T)
        states = [(tr.initial_upper, (0.0,) * c, u_t, l_t)]
        inner = [s for s in tr2.snapshots if s[0] > T]
        if len(inner) != len(tr.snapshots):
            return SuiteResult("funnel", False, checks, f"run {r}: windows see different arrivals")
        for a, b in zip(tr.snapshots, inner):
            states.append((a[1], a[2], b[1], b[2]))
            states.append((a[4], a[5], b[4], b[5]))
        for u, l, ut, lt in states:
            checks += 1
            if not (qc.leq_coordinatewise(l, lt) and qc.leq_coordinatewise(lt, ut)
                    and qc.leq_coordinatewise(ut, u)):
                return SuiteResult("funnel", False, checks, f"run {r}",
                                   {"run_id": r, "U": u, "L": l, "U~": ut, "L~": lt})
    return SuiteResult("funnel", True, checks, f"{runs} doubled runs")


def beta_suite(runs: int = 1000, betas=(0.5, 0.8), seed: int = 13) -> SuiteResult:
    """beta = 1 reproduces the base sample; faster servers coalesce by T^c."""
    checks = 0
    for r in range(runs):
        c, lam, mu = MONOTONE_CONFIGS[r % len(MONOTONE_CONFIGS)]
        spec = QueueSpec(c, lam, mu, beta_list=(1.0,) + tuple(betas), seed=seed)
        rec = omnithermal_sample(spec, r)
        checks += 1
        if rec.betas[1.0] != rec.samples[0]:
            return SuiteResult("beta variant", False, checks, f"run {r}: beta=1 differs from m=0")
        tr, path, *_ = omnithermal_draw(spec, r)
        for b in betas:
            fast = upper_run(path, c, 1 / b)
            checks += 1
            ok = (fast.coalesced and fast.coalesced_at <= tr.coalesced_at
                  and fast.final_lower == rec.betas[b])
            if not ok:
                return SuiteResult("beta variant", False, checks, f"run {r}, beta={b}",
                                   {"run_id": r, "Tc": tr.coalesced_at, "Tbeta": fast.coalesced_at})
    return SuiteResult("beta variant", True, checks, f"{runs} runs")


def sampler_agreement(runs: int = 5000, seed: int = 17, alpha: float = 0.01) -> SuiteResult:
    """Emptying-time sampler and omnithermal sampler agree in law (KS)."""
    spec_a = QueueSpec(2, 1.2, 1.0, seed=seed)
    spec_b = QueueSpec(2, 1.2, 1.0, seed=seed + 1)
    xs = [omnithermal_sample(spec_a, r).samples[0][0] for r in range(runs)]
    ys = [algorithm1_sample(spec_b, r).samples[0][0] for r in range(runs)]
    stat, p = ks_two_sample(xs, ys)
    return SuiteResult("sampler agreement", p > alpha, 1, f"KS D={stat:.4f} p={p:.4f}")


def all_suites(scale: float = 1.0, seed: int = 1):
    n = lambda k: max(1, int(k * scale))  # noqa: E731
    yield golden_example()
    yield tracker_equivalence(n(100_000), seed)
    yield order_preservation(n(10_000), seed + 1)
    yield monotone_termination(n(10_000), seed=seed + 2)
    yield funnel(n(1000), seed + 3)
    yield beta_suite(n(1000), seed=seed + 4)
    yield sampler_agreement(n(5000), seed + 5)


__all__ = [
    "SuiteResult", "EXAMPLE_TABLE", "EXAMPLE_MARKS", "golden_example", "tracker_equivalence",
    "order_preservation", "monotone_termination", "funnel", "beta_suite", "sampler_agreement",
    "all_suites",
]
