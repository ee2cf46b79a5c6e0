import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from anondyn.equations import EMPTY, LinearSystem, find_equations, rank, solve_one_parameter
from anondyn.history import build_ground_truth, locate, simulate
from anondyn.network import (ProcessInput, Schedule, gen_random_inputs, gen_random_schedule,
                             static_schedule)

P = ProcessInput


def test_single_strand_gives_empty_system():
    sim = simulate(Schedule(1, ([], [])), (P("z"),))
    t, system = find_equations(sim.views[2][0])
    assert t == 0 and system.k == 1 and system.equations == ()


def test_leafless_view_returns_minus_one():
    sim = simulate(static_schedule(2, [(1, 2)], 1), (P("A"), P("B")))
    assert find_equations(sim.views[1][0]) == (-1, EMPTY)


def test_two_process_link():
    sim = simulate(static_schedule(2, [(1, 2)], 2), (P("A"), P("B")))
    view = sim.views[2][0]
    t, system = find_equations(view)
    assert t == 0
    assert system.k == 2 and system.equations == ((0, 1, 1, 1),)
    assert system.lines() == ["1*x_1 = 1*x_2"]
    assert system.satisfied_by([1, 1])


def test_solve_trivial_and_chain():
    assert solve_one_parameter(LinearSystem(1)) == [1]
    chain = LinearSystem(3, ((0, 2, 1, 1), (1, 1, 2, 3)))
    assert solve_one_parameter(chain) == [1, 2, Fraction(2, 3)]
    assert solve_one_parameter(EMPTY) is None


def test_solve_rejects_underdetermined():
    assert solve_one_parameter(LinearSystem(3, ((0, 1, 1, 1),))) is None
    assert rank(LinearSystem(3, ((0, 1, 1, 1),))) == 1


def test_dense_fallback_with_redundant_equation():
    # a cycle of consistent equations skips the tree fast path
    system = LinearSystem(3, ((0, 2, 1, 1), (1, 1, 2, 3), (0, 2, 2, 3)))
    assert solve_one_parameter(system) == [1, 2, Fraction(2, 3)]
    assert rank(system) == 2


def test_inconsistent_cycle_has_no_ray():
    system = LinearSystem(3, ((0, 1, 1, 1), (1, 1, 2, 1), (0, 1, 2, 2)))
    assert rank(system) == 3
    assert solve_one_parameter(system) is None


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10**6))
def test_planted_solution_is_recovered(k, seed):
    rnd = random.Random(seed)
    planted = [rnd.randint(1, 9) for _ in range(k)]
    eqs = []
    for j in range(1, k):
        i = rnd.randrange(j)
        # m1 * planted[i] == m2 * planted[j]
        eqs.append((i, planted[j], j, planted[i]))
    system = LinearSystem(k, tuple(eqs))
    alpha = solve_one_parameter(system)
    assert alpha == [Fraction(p, planted[0]) for p in planted]
    assert rank(system) == k - 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 10**6))
def test_equations_hold_for_true_anonymities(n, T, seed):
    s = gen_random_schedule(n, T, 2 * n + 1, seed)
    inputs = gen_random_inputs(n, 0, seed)
    tree = build_ground_truth(s, inputs)
    sim = simulate(s, inputs)
    for r in range(2 * T * n, s.horizon + 1):
        view = sim.views[r][0]
        t, system = find_equations(view)
        assert 0 <= t <= T * n
        assert rank(system) == system.k - 1
        where = locate(view, tree.store)
        values = [tree.anonymity[where[v]] for v in view.level(t)]
        assert system.satisfied_by(values)
