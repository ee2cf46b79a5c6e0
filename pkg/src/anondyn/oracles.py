"""Brute-force references used to cross-check the simulator and algorithms.

Nothing here shares code with the history-tree construction: classes are
refined on plain tuples, and views are collected by graph search.
"""

from __future__ import annotations

from collections import Counter, deque
from fractions import Fraction

from .history import ROOT, HistoryTree, View
from .network import Schedule


def refinement_classes(schedule: Schedule, inputs, horizon: int) -> list:
    """``out[t]`` is the partition of processes (1-based, sorted) after round ``t``.

    Two processes share a class at round ``t`` iff they shared one at ``t-1``
    and saw the same multiset of neighbour classes in round ``t``.
    """
    n = schedule.n
    cls = _renumber([(x.value, x.leader) for x in inputs])
    out = [_partition(cls)]
    for t in range(1, horizon + 1):
        seen = [Counter() for _ in range(n)]
        for i, j, m in schedule.round(t):
            seen[i - 1][cls[j - 1]] += m
            seen[j - 1][cls[i - 1]] += m
        cls = _renumber([(cls[p], tuple(sorted(seen[p].items()))) for p in range(n)])
        out.append(_partition(cls))
    return out


def _renumber(signatures):
    ids = {}
    return [ids.setdefault(sig, len(ids)) for sig in signatures]


def _partition(cls):
    groups = {}
    for p, c in enumerate(cls, start=1):
        groups.setdefault(c, []).append(p)
    return sorted(groups.values())


def connected(n: int, edges) -> bool:
    """Breadth-first connectivity of vertices 1..n under ``(i, j, ...)`` edges."""
    adj = {v: set() for v in range(1, n + 1)}
    for e in edges:
        adj[e[0]].add(e[1])
        adj[e[1]].add(e[0])
    seen = {1}
    queue = deque([1])
    while queue:
        v = queue.popleft()
        for w in adj[v] - seen:
            seen.add(w)
            queue.append(w)
    return len(seen) == n


def disconnectivity_holds(schedule: Schedule, T: int) -> bool:
    return all(connected(schedule.n, [e for g in schedule.rounds[i:i + T] for e in g])
               for i in range(schedule.horizon - T + 1))


def view_by_search(tree: HistoryTree, node: int) -> View:
    """View of ``node`` collected by walking parent and red in-edges upward."""
    store = tree.store
    seen = {node}
    queue = deque([node])
    while queue:
        v = queue.popleft()
        if v == ROOT:
            continue
        for u in [store.parent[v]] + [u for u, _ in store.red_in[v]]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    depth = store.level[node]
    levels = [set() for _ in range(depth + 2)]
    for v in seen:
        levels[store.level[v] + 1].add(v)
    return View(store, [frozenset(s) for s in levels])


def concentration_truth(inputs) -> dict:
    n = len(inputs)
    return {z: Fraction(m, n) for z, m in Counter(inputs).items()}


def count_truth(inputs) -> dict:
    return dict(Counter(inputs))


def mean_truth(inputs) -> Fraction:
    return sum(Fraction(x.value) for x in inputs) / len(inputs)
