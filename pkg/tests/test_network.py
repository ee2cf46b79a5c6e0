import json

import pytest
from hypothesis import given, settings, strategies as st

from anondyn import oracles
from anondyn.network import (EMPTY_ROUND, ProcessInput, RoundGraph, Schedule, block_reduce,
                             cycle_edges, gen_cycle_with_one_marked, gen_leader_ring,
                             gen_random_inputs, gen_random_schedule, gen_scale_family, inventory,
                             load_inputs, load_schedule, dump_inputs, dump_schedule,
                             schedule_from_json, validate_disconnectivity)


def test_round_graph_merges_parallel_edges():
    g = RoundGraph.from_edges([(2, 1), (1, 2, 3)])
    assert g.edges == ((1, 2, 4),)
    assert g.multiplicity(2, 1) == 4
    assert g.total() == 4


@pytest.mark.parametrize("edge", [(1, 1), (1, 2, 0)])
def test_round_graph_rejects_bad_edges(edge):
    with pytest.raises(ValueError):
        RoundGraph.from_edges([edge])


def test_schedule_rejects_out_of_range_endpoint():
    with pytest.raises(ValueError):
        Schedule(2, ([(1, 3)],))


def test_rounds_past_horizon_are_empty():
    s = Schedule(2, ([(1, 2)],))
    assert s.round(1).edges == ((1, 2, 1),)
    assert s.round(5) is EMPTY_ROUND


def test_disconnectivity_single_process():
    assert validate_disconnectivity(Schedule(1, ([], [])), 2)


def test_disconnectivity_examples():
    s = Schedule(3, ([(1, 2)], [(2, 3)], [(1, 3)]))
    assert not validate_disconnectivity(s, 1)
    assert validate_disconnectivity(s, 2)
    assert oracles.disconnectivity_holds(s, 2)


@pytest.mark.parametrize("T", [0, -1, 4])
def test_disconnectivity_rejects_bad_T(T):
    with pytest.raises(ValueError):
        validate_disconnectivity(Schedule(3, ([(1, 2)], [(2, 3)], [(1, 3)])), T)


def test_block_reduce_identity_and_merge():
    s = Schedule(2, ([(1, 2)], [(1, 2)]))
    assert block_reduce(s, 1) == s
    assert block_reduce(s, 2).rounds == (RoundGraph(((1, 2, 2),)),)


def test_block_reduce_pads_partial_block():
    s = Schedule(3, ([(1, 2)], [(2, 3)], [(1, 3)]))
    r = block_reduce(s, 2)
    assert r.horizon == 2
    assert r.round(2).edges == ((1, 3, 1),)


def test_random_schedule_examples():
    s = gen_random_schedule(1, 3, 2, seed=7)
    assert s.horizon == 6 and all(len(g) == 0 for g in s.rounds)
    assert validate_disconnectivity(s, 3)
    s = gen_random_schedule(5, 1, 10, seed=1)
    assert all(oracles.connected(5, g) for g in s.rounds)
    assert gen_random_schedule(6, 3, 4, seed=9) == gen_random_schedule(6, 3, 4, seed=9)


schedules = st.builds(gen_random_schedule, st.integers(1, 7), st.integers(1, 4),
                      st.integers(1, 5), st.integers(0, 10**6))


@settings(max_examples=60, deadline=None)
@given(schedules)
def test_disconnectivity_is_monotone_in_T(s):
    for T in range(1, s.horizon + 1):
        if validate_disconnectivity(s, T):
            assert all(validate_disconnectivity(s, U) for U in range(T, s.horizon + 1))
            assert oracles.disconnectivity_holds(s, T)
            break
    else:
        pytest.fail("no window size makes the schedule connected")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
def test_random_schedule_valid_at_its_T(n, T, blocks, seed):
    s = gen_random_schedule(n, T, blocks, seed)
    assert s.horizon == T * blocks
    assert validate_disconnectivity(s, T)


@settings(max_examples=60, deadline=None)
@given(schedules, st.integers(1, 5))
def test_block_reduce_preserves_total_multiplicity(s, T):
    r = block_reduce(s, T)
    assert sum(g.total() for g in r.rounds) == sum(g.total() for g in s.rounds)
    assert r.horizon == -(-s.horizon // T)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10**6))
def test_block_reduce_of_valid_schedule_is_connected_each_round(n, T, blocks, seed):
    s = gen_random_schedule(n, T, blocks, seed)
    assert validate_disconnectivity(block_reduce(s, T), 1)


def test_scale_family_shapes():
    s, inputs = gen_scale_family([3, 4], 1, 2)
    assert s.n == 7
    assert s.round(1).total() == 12 + 3 + 4
    assert inventory(inputs) == {ProcessInput("z1"): 3, ProcessInput("z2"): 4}
    s, inputs = gen_scale_family([3, 4], 2, 1)
    assert s.n == 14
    degree = {p: 0 for p in range(1, 15)}
    for i, j, m in s.round(1):
        degree[i] += m
        degree[j] += m
    assert all(degree[p] == 6 for p in range(1, 15) if inputs[p - 1].value == "z1")


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_scale_family_size(alpha):
    s, _ = gen_scale_family([3, 5, 4], alpha, 1)
    assert s.n == alpha * 12


@pytest.mark.parametrize("sizes", [[2, 3], [3, 6], [4, 6, 8]])
def test_scale_family_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        gen_scale_family(sizes, 1, 1)


def test_leader_ring():
    s, inputs = gen_leader_ring(3, 3, 2)
    assert s.n == 9
    assert [p for p, x in enumerate(inputs, 1) if x.leader] == [1, 4, 7]
    assert len({x.value for x in inputs}) == 1
    _, inputs = gen_leader_ring(1, 3, 1)
    assert all(x.leader for x in inputs)
    with pytest.raises(ValueError):
        gen_leader_ring(3, 2, 1)


def test_marked_cycle():
    (s, inputs), (c, cin) = gen_cycle_with_one_marked(1)
    assert s.n == 4 and c.n == 3
    assert [x.value for x in inputs] == ["1", "0", "0", "0"]
    assert all(x.value == "0" for x in cin)
    (s, inputs), _ = gen_cycle_with_one_marked(2)
    assert oracles.mean_truth(inputs) * 6 == 1


def test_random_inputs_leader_count():
    inputs = gen_random_inputs(6, 2, seed=4)
    assert sum(x.leader for x in inputs) == 2
    assert inputs == gen_random_inputs(6, 2, seed=4)


def test_json_round_trip(tmp_path):
    s = gen_random_schedule(4, 2, 3, seed=5)
    inputs = gen_random_inputs(4, 1, seed=5)
    dump_schedule(s, tmp_path / "s.json")
    dump_inputs(inputs, tmp_path / "i.json")
    assert load_schedule(tmp_path / "s.json") == s
    assert load_inputs(tmp_path / "i.json") == inputs


def test_json_multiplicity_defaults_to_one():
    s = schedule_from_json(json.loads('{"n": 2, "rounds": [[[1, 2]]]}'))
    assert s.round(1).edges == ((1, 2, 1),)


def test_cycle_edges():
    assert cycle_edges([1, 2, 3]) == [(1, 2), (2, 3), (3, 1)]


def test_process_input_str():
    assert str(ProcessInput("7", True)) == "L:7"
    assert str(ProcessInput("7")) == "N:7"
