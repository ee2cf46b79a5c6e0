import pickle
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from anondyn import oracles
from anondyn.leaderless import (UNKNOWN, average_consensus, maximum, mean, mode,
                                scale_invariant_eval, smallest_multiset,
                                stabilizing_concentration, terminating_concentration, variance)
from anondyn.network import (ProcessInput, cycle_edges, gen_cycle_with_one_marked,
                             gen_random_inputs, gen_random_schedule, gen_scale_family,
                             static_schedule)
from anondyn.history import simulate

P = ProcessInput
A, B = P("0"), P("1")


def test_unknown_is_a_falsy_singleton():
    assert not UNKNOWN
    assert repr(UNKNOWN) == "Unknown"
    assert pickle.loads(pickle.dumps(UNKNOWN)) is UNKNOWN


def test_same_input_everywhere():
    s = gen_random_schedule(4, 2, 3, seed=1)
    sim = simulate(s, (P("z"),) * 4, task=stabilizing_concentration)
    outs = [o for row in sim.outputs for o in row if o is not UNKNOWN]
    assert outs and all(o == {P("z"): 1} for o in outs)


def test_two_process_link():
    sim = simulate(static_schedule(2, [(1, 2)], 3), (A, B), task=stabilizing_concentration)
    assert sim.outputs[1] == [UNKNOWN, UNKNOWN]
    half = {A: Fraction(1, 2), B: Fraction(1, 2)}
    assert sim.outputs[2] == sim.outputs[3] == [half, half]


def test_terminating_single_process():
    sim = simulate(static_schedule(1, [], 3), (P("z"),),
                   task=lambda v: terminating_concentration(v, 1, 1), terminating=True)
    assert sim.terminated_at == [1]
    assert sim.outputs[1][0] == sim.outputs[3][0] == {P("z"): 1}


def test_terminating_never_stops_unknown():
    sim = simulate(static_schedule(2, [(1, 2)], 1), (A, B))
    assert terminating_concentration(sim.views[1][0], 1, 100, current_round=10**6) == (UNKNOWN, False)


def test_scale_invariant_examples():
    half = {A: Fraction(1, 2), B: Fraction(1, 2)}
    assert scale_invariant_eval(half, mean, A) == Fraction(1, 2)
    assert smallest_multiset({A: Fraction(2, 3), B: Fraction(1, 3)}) == {A: 2, B: 1}
    with pytest.raises(ValueError):
        scale_invariant_eval(UNKNOWN, mean, A)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_mean_of_marked_cycle(t):
    (s, inputs), _ = gen_cycle_with_one_marked(t)
    s = static_schedule(s.n, list(s.round(1)), 4 * s.n)
    sim = simulate(s, inputs, task=average_consensus)
    assert all(o == Fraction(1, 2 * t + 2) for o in sim.outputs[-1])
    assert Fraction(1, 2 * t + 2) == oracles.mean_truth(inputs)


def test_average_consensus_examples():
    s = static_schedule(3, cycle_edges([1, 2, 3]), 6)
    sim = simulate(s, (P("5"),) * 3, task=average_consensus)
    assert sim.outputs[-1] == [5, 5, 5]
    sim = simulate(s, (P("0"), P("0"), P("1")), task=average_consensus)
    assert sim.outputs[-1] == [Fraction(1, 3)] * 3


def test_builtin_signatures():
    ms = {P("1"): 2, P("3"): 2, P("2"): 1}
    assert mean(None, ms) == Fraction(2)
    assert maximum(None, ms) == 3
    assert mode(None, ms) == 1
    assert variance(None, ms) == Fraction(4, 5)


def test_scale_invariance_across_alpha():
    results = set()
    for alpha in (1, 2, 3):
        s, inputs = gen_scale_family([3, 4], alpha, 14)
        sim = simulate(s, inputs, task=stabilizing_concentration)
        results |= {tuple(sorted(o.items())) for o in sim.outputs[-1]}
    assert len(results) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 10**6))
def test_concentration_sums_to_one_and_is_exact(n, T, seed):
    s = gen_random_schedule(n, T, 2 * n + 1, seed)
    inputs = gen_random_inputs(n, 0, seed)
    sim = simulate(s, inputs, task=stabilizing_concentration)
    truth = oracles.concentration_truth(inputs)
    for t, row in enumerate(sim.outputs):
        for out in row:
            if out is not UNKNOWN:
                assert sum(out.values()) == 1
                assert all(0 < f <= 1 for f in out.values())
            if t >= 2 * T * n:
                assert out == truth
