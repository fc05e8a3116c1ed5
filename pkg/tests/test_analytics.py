import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omniqueue.analytics import (
    erlang_c_probability,
    erlang_c_wq,
    ks_two_sample,
    summarize,
    within_se,
)
from omniqueue.dominating import UnstableQueue
from omniqueue.sampler import QueueSpec, SampleRecord, omnithermal_sample


def test_erlang_c_reference_values():
    assert erlang_c_wq(2, 1.2, 1.0) == pytest.approx(0.5625, rel=1e-12)
    assert erlang_c_wq(3, 1.2, 1.0) == pytest.approx(4 / 51, rel=1e-12)
    assert erlang_c_wq(1, 0.5, 1.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("lam,mu", [(0.5, 1.0), (0.9, 2.0), (3.0, 3.5)])
def test_single_server_reduction(lam, mu):
    assert erlang_c_wq(1, lam, mu) == pytest.approx(lam / (mu * (mu - lam)), rel=1e-12)


def test_decreasing_in_server_count():
    ws = [erlang_c_wq(c, 1.9, 1.0) for c in range(2, 30)]
    assert all(a > b for a, b in zip(ws, ws[1:]))


def test_large_server_count_is_finite():
    p = erlang_c_probability(10_000, 9_900.0, 1.0)
    assert 0 < p < 1


def test_unstable_rejected():
    with pytest.raises(UnstableQueue):
        erlang_c_wq(2, 2.0, 1.0)


def _rec(i, v, d=0):
    return SampleRecord(i, {0: tuple(v)}, doublings_condition=d)


def test_identical_records_have_zero_stderr():
    s = summarize([_rec(i, (0.5, 2.0)) for i in range(10)])
    assert list(s.means) == [0.5, 2.0] and list(s.stderrs) == [0.0, 0.0]


def test_zero_vectors_give_step_at_zero():
    s = summarize([_rec(i, (0.0, 0.0)) for i in range(4)])
    xs, fs = s.cdf(0)
    assert list(xs) == [0.0] and list(fs) == [1.0]
    assert s.extensions == {0: 4} and s.runs == 4


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        summarize([])


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10), st.integers(0, 3)),
                min_size=2, max_size=30), st.randoms())
def test_summary_invariants_and_permutation_invariance(rows, rnd):
    batch = [_rec(i, sorted((a, b)), d) for i, (a, b, d) in enumerate(rows)]
    s = summarize(batch)
    for xs, fs in s.cdfs:
        assert np.all(np.diff(fs) > 0) and fs[-1] == 1.0
    assert sum(s.extensions.values()) == len(batch)
    shuffled = batch[:]
    rnd.shuffle(shuffled)
    t = summarize(shuffled)
    assert np.allclose(s.means, t.means, rtol=1e-12, atol=0)
    assert all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
               for a, b in zip(s.cdfs, t.cdfs))


def test_ks_examples():
    rng = np.random.default_rng(0)
    x = rng.exponential(1.0, 5000)
    assert ks_two_sample(x, x)[0] == 0
    assert ks_two_sample(x, rng.exponential(0.5, 5000))[1] < 0.001
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def test_ks_calibration_on_same_law():
    rng = np.random.default_rng(1)
    passed = sum(ks_two_sample(rng.exponential(1.0, 5000), rng.exponential(1.0, 5000))[1] > 0.01
                 for _ in range(100))
    assert passed >= 95


def test_summarize_means_oracle_small_batch():
    spec = QueueSpec(2, 1.2, 1.0, seed=3)
    s = summarize([omnithermal_sample(spec, r) for r in range(2000)])
    assert within_se(s.means[0], s.stderrs[0], 0.5625)
