"""Linear equations in the anonymities of one level of a view.

Levels whose nodes all have exactly one child split into strands. Two
same-level non-branching nodes whose children each hear the other node are
*exposed*; links between their classes counted from both sides give
``m1 * a(v1) = m2 * a(v2)``. Once the exposed strands of a run of
non-branching levels form a connected graph, a spanning tree of that graph
yields ``k - 1`` independent equations in the ``k`` anonymities of the
strands' last level.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .history import View


class ExposedPair(NamedTuple):
    level: int
    v1: int
    v2: int
    m1: int
    m2: int


@dataclass(frozen=True)
class LinearSystem:
    """Homogeneous equations ``m1 * x[i] = m2 * x[j]`` over ``k`` variables (0-based)."""

    k: int
    equations: tuple = ()
    pairs: tuple = field(default=(), compare=False)

    def satisfied_by(self, values) -> bool:
        return all(m1 * values[i] == m2 * values[j] for i, m1, j, m2 in self.equations)

    def lines(self) -> list:
        return [f"{m1}*x_{i + 1} = {m2}*x_{j + 1}" for i, m1, j, m2 in self.equations]


EMPTY = LinearSystem(0)


def exposed_pairs(view: View, t: int) -> list:
    """Exposed pairs among the non-branching nodes of level ``t``."""
    nodes = [v for v in view.level(t) if len(view.children(v)) == 1]
    out = []
    for a, v1 in enumerate(nodes):
        c1 = view.children(v1)[0]
        for v2 in nodes[a + 1:]:
            c2 = view.children(v2)[0]
            m1 = view.red(c1, v2)
            m2 = view.red(c2, v1)
            if m1 and m2:
                out.append(ExposedPair(t, v1, v2, m1, m2))
    return out


def find_equations(view: View):
    """Scan the levels of ``view`` for a connected run of strands.

    Returns ``(t, system)`` where the system's variables are the anonymities
    of level ``t`` in canonical order, or ``(-1, EMPTY)`` if the scan reaches
    a node without children first.
    """
    s = 0
    # strand id of each node in the current run: the run's level-s node
    strand_of = {}
    pairs = []
    for t in range(0, view.depth + 1):
        level = view.level(t)
        counts = [len(view.children(v)) for v in level]
        if 0 in counts:
            return -1, EMPTY
        if any(c > 1 for c in counts):
            s = t + 1
            strand_of = {}
            pairs = []
            continue
        for v in level:
            strand_of[v] = v if t == s else strand_of[view.parent(v)]
        pairs.extend(exposed_pairs(view, t))
        system = _spanning_system(view, level, strand_of, pairs)
        if system is not None:
            return t, system
    return -1, EMPTY


def _spanning_system(view: View, level, strand_of, pairs):
    k = len(level)
    head_index = {strand_of[u]: i for i, u in enumerate(level)}
    # first exposed pair (by level, then ranks) for each pair of strands
    best = {}
    for p in pairs:
        i, j = head_index[strand_of[p.v1]], head_index[strand_of[p.v2]]
        if i == j:
            continue
        if i > j:
            p = ExposedPair(p.level, p.v2, p.v1, p.m2, p.m1)
            i, j = j, i
        key = (p.level, view.store.rank(p.v1), view.store.rank(p.v2))
        if (i, j) not in best or key < best[(i, j)][0]:
            best[(i, j)] = (key, p)
    adj = {i: [] for i in range(k)}
    for i, j in best:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    tree = []
    while queue:
        i = queue.popleft()
        for j in sorted(adj[i]):
            if j not in seen:
                seen.add(j)
                queue.append(j)
                tree.append((min(i, j), max(i, j)))
    if len(seen) != k:
        return None
    eqs = []
    used = []
    for i, j in tree:
        p = best[(i, j)][1]
        eqs.append((i, p.m1, j, p.m2))
        used.append(p)
    return LinearSystem(k, tuple(eqs), tuple(used))


def solve_one_parameter(system: LinearSystem):
    """Positive ray ``alpha`` with ``alpha[0] == 1`` solving the system exactly.

    Returns None unless the coefficient matrix has rank ``k - 1`` and the
    solution ray is strictly positive.
    """
    k = system.k
    if k == 0:
        return None
    alpha = _propagate_tree(system)
    if alpha is not None:
        return alpha
    rows = []
    for i, m1, j, m2 in system.equations:
        row = [Fraction(0)] * k
        row[i] += m1
        row[j] -= m2
        rows.append(row)
    pivots = []
    r = 0
    for c in range(k):
        pr = next((x for x in range(r, len(rows)) if rows[x][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [a * inv for a in rows[r]]
        for x in range(len(rows)):
            if x != r and rows[x][c] != 0:
                f = rows[x][c]
                rows[x] = [a - f * b for a, b in zip(rows[x], rows[r])]
        pivots.append(c)
        r += 1
    if r != k - 1:
        return None
    free = next(c for c in range(k) if c not in pivots)
    x = [Fraction(0)] * k
    x[free] = Fraction(1)
    for row, c in zip(rows, pivots):
        x[c] = -row[free]
    if x[0] == 0:
        return None
    alpha = [v / x[0] for v in x]
    if any(a <= 0 for a in alpha):
        return None
    return alpha


def _propagate_tree(system: LinearSystem):
    # k-1 equations connecting all k variables form a tree: the ray is fixed
    # by walking it from x[0], and nonzero coefficients make the rank k-1
    k = system.k
    if len(system.equations) != k - 1:
        return None
    adj = [[] for _ in range(k)]
    for i, m1, j, m2 in system.equations:
        if m1 <= 0 or m2 <= 0:
            return None
        adj[i].append((j, Fraction(m1, m2)))
        adj[j].append((i, Fraction(m2, m1)))
    alpha = [None] * k
    alpha[0] = Fraction(1)
    stack = [0]
    while stack:
        i = stack.pop()
        for j, ratio in adj[i]:
            if alpha[j] is None:
                alpha[j] = alpha[i] * ratio
                stack.append(j)
    return None if None in alpha else alpha


def rank(system: LinearSystem) -> int:
    """Rank of the coefficient matrix, by exact elimination."""
    rows = []
    for i, m1, j, m2 in system.equations:
        row = [Fraction(0)] * system.k
        row[i] += m1
        row[j] -= m2
        rows.append(row)
    r = 0
    for c in range(system.k):
        pr = next((x for x in range(r, len(rows)) if rows[x][c] != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        for x in range(r + 1, len(rows)):
            if rows[x][c] != 0:
                f = rows[x][c] / rows[r][c]
                rows[x] = [a - f * b for a, b in zip(rows[x], rows[r])]
        r += 1
    return r
