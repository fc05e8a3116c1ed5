from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omniqueue import queue_core as qc
from omniqueue.sampler import QueueSpec, omnithermal_draw
from omniqueue.sandwich import (
    SandwichState,
    advance,
    apply_arrival,
    check_theorem_condition,
    every_arrival_finds_idle_lower,
    init_pair,
    recompute_C,
    run_window,
)
from omniqueue.validation import example_initial, example_marks


# --- init_pair ----------------------------------------------------------------

def test_init_pair_two_servers():
    s = init_pair((0.0, 1.0), 2)
    assert s.U == (0.0, 1.0) and s.L == (0.0, 0.0)
    assert s.agreement == {1} and s.n == 2 and s.C == 1.0 and not s.coalesced


def test_init_pair_all_zero_coalesces_at_once():
    s = init_pair((0.0, 0.0), 2, clock=-3.0)
    assert s.C == 0 and s.coalesced_at == -3.0


def test_init_pair_three_servers():
    s = init_pair((0.0, 0.0, 1.0), 3)
    assert s.agreement == {1, 2} and s.n == 3 and s.C == 1.0


def test_init_pair_length_mismatch():
    with pytest.raises(qc.InvalidInput):
        init_pair((0.0, 1.0), 3)


# --- advance ------------------------------------------------------------------

def test_advance_hits_coalescence_at_closed_form_time():
    s = SandwichState((2.0, 5.5), (1.3, 5.5), 0.8, 2.0)
    out = advance(s, 2.0)
    assert out.coalesced_at == 2.8 and out.U == out.L


def test_advance_absorbs_and_zero_step_is_identity():
    s = advance(SandwichState((2.0, 5.5), (1.3, 5.5), 0.8, 2.0), 3.0)
    again = advance(s, 7.5)
    assert again.U == again.L and again.coalesced_at == s.coalesced_at
    assert advance(s, 0) is s


def test_advance_rejects_negative_step():
    with pytest.raises(qc.InvalidInput):
        advance(init_pair((0.0, 1.0), 2), -1.0)


# --- apply_arrival ------------------------------------------------------------------

def test_arrival_lowest_disagreeing_raises_tracker():
    s = SandwichState((0.2, 0.5, 1.3), (0.0, 0.5, 1.3), 0.8, 0.2)
    assert apply_arrival(s, 5.0).C == 5.2


def test_arrival_lowest_agreeing_keeps_tracker():
    s = SandwichState((0.0, 0.2, 0.5, 1.3), (0.0, 0.0, 0.5, 1.3), 0.8, 0.2)
    out = apply_arrival(s, 5.0)
    assert out.C == 0.2 and out.violations == ()


def test_arrival_on_agreeing_busy_server_is_a_violation():
    s = SandwichState((0.5, 2.0), (0.5, 1.3), 0.8, 2.0)
    assert apply_arrival(s, 5.0).violations == (0.8,)


def test_arrival_rejects_nonpositive_size():
    with pytest.raises(qc.InvalidInput):
        apply_arrival(init_pair((0.0, 1.0), 2), 0.0)


# --- recompute_C ------------------------------------------------------------------

def test_recompute_examples():
    assert recompute_C((2.0, 5.5), (1.3, 5.5)) == 2.0
    assert recompute_C((1.0, 4.0), (1.0, 4.0)) == 0
    assert recompute_C((0.5, 1.3, 5.2), (0.5, 1.3, 5.0)) == 5.2
    with pytest.raises(qc.InvalidInput):
        recompute_C((1.0,), (1.0, 2.0))


# --- run_window and the condition ---------------------------------------------------

SHIFT = F(-3)


def example_run(c, horizon):
    return run_window(example_initial("U", c), example_marks(SHIFT), c, end=horizon + SHIFT)


def test_example_two_servers_coalesce_at_2_8():
    tr = example_run(2, F(3))
    assert tr.coalesced_at - SHIFT == F("2.8")
    assert example_run(2, F("2.7")).coalesced_at is None


def test_example_three_and_four_servers_by_2_8():
    assert example_run(3, F("2.8")).coalesced_at is None
    four = example_run(4, F("2.8"))
    assert four.coalesced and four.final_upper == four.final_lower


def test_example_condition_fails_for_two_servers():
    assert not check_theorem_condition(example_run(2, F(3)))


def test_condition_vacuous_without_marks():
    tr = run_window((0.0, 1.5), qc.MarkSequence(-2.0, ()), 2)
    assert check_theorem_condition(tr) and tr.coalesced_at == -0.5


def test_condition_holds_when_lower_never_fills():
    marks = qc.MarkSequence(-4.0, ((-3.5, 0.25), (-2.0, 0.5)))
    tr = run_window((0.0, 0.0, 1.0), marks, 3, record=True)
    assert every_arrival_finds_idle_lower(tr) and check_theorem_condition(tr)


# --- properties -------------------------------------------------------------------

quarter = st.integers(0, 24).map(lambda k: k / 4)
duration = st.integers(1, 24).map(lambda k: k / 4)


@st.composite
def runs(draw):
    c = draw(st.integers(1, 5))
    u = tuple(sorted(draw(st.lists(quarter, min_size=c, max_size=c))))
    gaps = draw(st.lists(st.tuples(duration, duration), max_size=15))
    return c, u, gaps


@settings(max_examples=300)
@given(runs())
def test_incremental_tracker_matches_direct_and_order_holds(run):
    c, u, gaps = run
    state = init_pair(u, c)
    for gap, s in gaps:
        state = advance(state, gap)
        assert state.C == recompute_C(state.U, state.L)
        lowest_agreed = state.U[0] == state.L[0]
        before = state
        state = apply_arrival(state, s)
        assert state.C == recompute_C(state.U, state.L)
        assert qc.leq_coordinatewise(state.L, state.U)
        if lowest_agreed:
            assert state.C == before.C
        if before.U == before.L:
            assert state.U == state.L
        for k in state.agreement:
            assert state.U[k - 1] - state.L[k - 1] == 0


@settings(max_examples=200)
@given(runs(), st.integers(1, 3))
def test_upper_processes_stay_ordered_across_server_counts(run, m):
    c, u, gaps = run
    small, big = u, (0.0,) * m + u
    for gap, s in gaps:
        small = qc.kw_step(small, s, gap)
        big = qc.kw_step(big, s, gap)
        assert qc.leq_partial(big, small)


@pytest.mark.parametrize("run_id", range(40))
def test_coalescence_happens_on_an_idle_server(run_id):
    spec = QueueSpec(3, 2.4, 1.0, seed=21)
    tr, path, *_ = omnithermal_draw(spec, run_id, record=True)
    t_c = tr.coalesced_at
    after = [s for s in tr.snapshots if s[0] <= t_c]
    last = after[-1] if after else None
    state_u = qc.kw_drain(last[4] if last else tr.initial_upper, t_c - (last[0] if last else tr.T))
    assert state_u[0] == 0


@pytest.mark.parametrize("run_id", range(40))
def test_tracker_monotone_across_server_counts(run_id):
    c = 2
    spec = QueueSpec(c, 1.2, 1.0, seed=23)
    tr, path, *_ = omnithermal_draw(spec, run_id, record=True)
    for m in (1, 2):
        big = run_window(path.upper_start(c + m), path.marks(), c + m, record=True)
        if recompute_C(big.initial_upper, (0.0,) * (c + m)) > recompute_C(tr.initial_upper, (0.0,) * c):
            continue
        for a, b in zip(tr.snapshots, big.snapshots):
            if a[0] > tr.coalesced_at:
                break
            assert b[3] <= a[3] and b[6] <= a[6]
