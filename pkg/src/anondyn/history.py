"""History trees, views, and the view-merging algorithm run by every process.

Nodes live in a :class:`NodeStore`. A node is identified by its structure:
a level-0 node by its label, a deeper node by its parent together with the
multiset of its red in-edges. This is exactly the rule by which a process
matches nodes of a received view against its own, so embedding a view into
a store is a lookup-or-create per node, and two views held in the same store
merge by a level-wise union of node sets.

Red edges are stored once, as in-edges ``(upper node, multiplicity)`` on the
lower node.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .network import ProcessInput, Schedule

ROOT = 0


class NodeStore:
    """Append-only table of history-tree nodes, interned by structure."""

    def __init__(self):
        self.level = [-1]
        self.label = [None]
        self.parent = [-1]
        self.red_in = [()]
        self.red_map = [{}]
        self.children = [[]]
        self.red_out = [[]]
        self._index = {}
        self._by_level = {-1: [ROOT]}
        self._rank = {ROOT: 0}
        self._dirty = None
        self._sorted = {}
        self._encoded = {}

    def __len__(self):
        return len(self.level)

    def find(self, parent: int, red_in=(), label=None):
        """Node with this structure, or None."""
        return self._index.get(self._key(parent, red_in, label))

    def _key(self, parent, red_in, label):
        if parent == ROOT:
            if label is None:
                raise ValueError("level-0 nodes need a label")
            return (ROOT, label)
        if isinstance(red_in, dict):
            red_in = red_in.items()
        return (parent, tuple(sorted((int(u), int(m)) for u, m in red_in if m)))

    def intern(self, parent: int, red_in=(), label=None) -> int:
        key = self._key(parent, red_in, label)
        gid = self._index.get(key)
        if gid is not None:
            return gid
        lvl = self.level[parent] + 1
        red = key[1] if parent != ROOT else ()
        for u, _ in red:
            if self.level[u] != lvl - 1:
                raise ValueError("red edges must join adjacent levels")
        gid = len(self.level)
        self.level.append(lvl)
        self.label.append(label if parent == ROOT else self.label[parent])
        self.parent.append(parent)
        self.red_in.append(red)
        self.red_map.append(dict(red))
        self.children.append([])
        self.red_out.append([])
        self.children[parent].append(gid)
        for u, _ in red:
            self.red_out[u].append(gid)
        self._index[key] = gid
        self._by_level.setdefault(lvl, []).append(gid)
        if self._dirty is None or lvl < self._dirty:
            self._dirty = lvl
        return gid

    def is_leader(self, v: int) -> bool:
        lab = self.label[v]
        return lab is not None and lab.leader

    # Nodes of one level are totally ordered by (label, parent, red in-edges),
    # comparing upper nodes by their own order. The order restricted to any
    # view is the view's canonical order, and it never changes as nodes are
    # added, so sorted level tuples can be cached by node set.
    def rank(self, v: int) -> int:
        if self._dirty is not None:
            self._rerank()
        return self._rank[v]

    def _rerank(self):
        lvl = self._dirty
        while lvl in self._by_level:
            nodes = self._by_level[lvl]
            rank = self._rank
            if lvl == 0:
                nodes.sort(key=lambda v: self.label[v])
            else:
                nodes.sort(key=lambda v: (rank[self.parent[v]],
                                          sorted((rank[u], m) for u, m in self.red_in[v])))
            for r, v in enumerate(nodes):
                rank[v] = r
            lvl += 1
        self._dirty = None

    def sort_level(self, nodes: frozenset) -> tuple:
        out = self._sorted.get(nodes)
        if out is None:
            if self._dirty is not None:
                self._rerank()
            out = tuple(sorted(nodes, key=self._rank.__getitem__))
            self._sorted[nodes] = out
        return out

    def encode_level(self, upper: frozenset, nodes: frozenset) -> bytes:
        key = (upper, nodes)
        out = self._encoded.get(key)
        if out is None:
            order = self.sort_level(nodes)
            if upper is None:
                items = [(lab.value, lab.leader) for lab in (self.label[v] for v in order)]
            else:
                pos = {u: i for i, u in enumerate(self.sort_level(upper))}
                items = [(pos[self.parent[v]], sorted((pos[u], m) for u, m in self.red_in[v]))
                         for v in order]
            out = repr(items).encode()
            self._encoded[key] = out
        return out


class View:
    """A view: the nodes on ascending paths from one viewpoint, by level.

    ``levels[t + 1]`` is the frozenset of nodes at level ``t``. Views are
    immutable; the store they point into only ever grows.
    """

    __slots__ = ("store", "levels", "_children", "_canon")

    def __init__(self, store: NodeStore, levels: Sequence[frozenset]):
        self.store = store
        self.levels = tuple(levels)
        self._children = None
        self._canon = None
        if len(self.levels[-1]) != 1:
            raise ValueError("a view has exactly one node at its deepest level")

    @property
    def depth(self) -> int:
        """Level of the viewpoint, i.e. the round the view belongs to."""
        return len(self.levels) - 2

    @property
    def viewpoint(self) -> int:
        return next(iter(self.levels[-1]))

    def level(self, t: int) -> tuple:
        """Nodes of level ``t`` in canonical order."""
        return self.store.sort_level(self.levels[t + 1])

    def __contains__(self, v: int) -> bool:
        lvl = self.store.level[v]
        return 0 <= lvl + 1 < len(self.levels) and v in self.levels[lvl + 1]

    def __len__(self):
        return sum(len(s) for s in self.levels)

    def nodes(self):
        for t in range(-1, self.depth + 1):
            yield from self.level(t)

    def children(self, v: int) -> tuple:
        """Children of ``v`` present in this view, in canonical order."""
        if self._children is None:
            self._children = {}
        out = self._children.get(v)
        if out is None:
            lvl = self.store.level[v]
            below = self.levels[lvl + 2] if lvl + 2 < len(self.levels) else frozenset()
            kids = [c for c in self.store.children[v] if c in below]
            out = self.store.sort_level(frozenset(kids)) if len(kids) > 1 else tuple(kids)
            self._children[v] = out
        return out

    def red_below(self, u: int) -> list:
        """Nodes of the next level in this view with a red edge from ``u``."""
        lvl = self.store.level[u]
        if lvl + 2 >= len(self.levels):
            return []
        below = self.levels[lvl + 2]
        return [v for v in self.store.red_out[u] if v in below]

    def red(self, lower: int, upper: int) -> int:
        """Multiplicity of the red edge between ``lower`` and the level above."""
        return self.store.red_map[lower].get(upper, 0)

    def label(self, v: int):
        return self.store.label[v]

    def parent(self, v: int) -> int:
        return self.store.parent[v]

    def node_level(self, v: int) -> int:
        return self.store.level[v]

    def canonical_form(self) -> bytes:
        if self._canon is None:
            enc = self.store.encode_level
            parts = [enc(None, self.levels[1])] if len(self.levels) > 1 else []
            parts += [enc(self.levels[i - 1], self.levels[i]) for i in range(2, len(self.levels))]
            self._canon = b"V%d|" % self.depth + b"|".join(parts)
        return self._canon

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_form()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, View):
            return NotImplemented
        if self.store is other.store:
            return self.levels == other.levels
        return self.canonical_form() == other.canonical_form()

    def __hash__(self):
        return hash(self.canonical_form())

    def __repr__(self):
        return f"View(depth={self.depth}, nodes={len(self)})"


def canonical_form(view: View) -> bytes:
    """Encoding equal for two views iff they are isomorphic."""
    return view.canonical_form()


def root_view(store: NodeStore) -> View:
    return View(store, (frozenset([ROOT]),))


def initial_view(store: NodeStore, label: ProcessInput) -> View:
    """View of a process at round 0."""
    return View(store, (frozenset([ROOT]), frozenset([store.intern(ROOT, label=label)])))


def embed_view(view: View, store: NodeStore) -> tuple:
    """Copy ``view`` into ``store``, matching existing nodes where possible.

    Level by level, each node is matched with the node of ``store`` that has
    the image of its parent, its label, and the images of its red in-edges,
    or created when no such node exists. Returns ``(embedded view, mapping)``.
    """
    if view.store is store:
        return view, {v: v for v in view.nodes()}
    src = view.store
    phi = {ROOT: ROOT}
    levels = [frozenset([ROOT])]
    for t in range(0, view.depth + 1):
        layer = []
        for v in view.level(t):
            if t == 0:
                w = store.intern(ROOT, label=src.label[v])
            else:
                w = store.intern(phi[src.parent[v]], [(phi[u], m) for u, m in src.red_in[v]])
            phi[v] = w
            layer.append(w)
        levels.append(frozenset(layer))
    return View(store, levels), phi


def locate(view: View, store: NodeStore):
    """Map the nodes of ``view`` onto existing nodes of ``store`` (no creation).

    Returns None if some node has no counterpart.
    """
    if view.store is store:
        return {v: v for v in view.nodes()}
    src = view.store
    phi = {ROOT: ROOT}
    for t in range(0, view.depth + 1):
        for v in view.level(t):
            if t == 0:
                w = store.find(ROOT, label=src.label[v])
            else:
                w = store.find(phi[src.parent[v]], [(phi[u], m) for u, m in src.red_in[v]])
            if w is None:
                return None
            phi[v] = w
    return phi


def _union_levels(base: list, other: Sequence[frozenset]) -> None:
    for i, s in enumerate(other):
        cur = base[i]
        if cur is not s and not s <= cur:
            base[i] = cur | s


def merge_view(own: View, received: Iterable) -> View:
    """One step of view construction: ``own`` at round i-1 plus the multiset of
    views received in round i (pairs ``(view, multiplicity)``) gives the view
    at round i.
    """
    store = own.store
    levels = list(own.levels)
    red: Counter = Counter()
    for view, mult in received:
        if mult < 1:
            raise ValueError("message multiplicities must be positive")
        if view.depth != own.depth:
            raise ValueError(
                f"received a round-{view.depth} view while at round {own.depth}")
        if view.store is not store:
            view, _ = embed_view(view, store)
        _union_levels(levels, view.levels)
        red[view.viewpoint] += mult
    levels.append(frozenset([store.intern(own.viewpoint, red)]))
    return View(store, levels)


@dataclass
class HistoryTree:
    """Ground-truth history tree of a (schedule, inputs) pair up to a horizon.

    ``rep[t][p]`` is the level-``t`` node representing process ``p + 1``.
    """

    store: NodeStore
    n: int
    rep: list
    anonymity: dict
    _views: dict = field(default_factory=dict, repr=False)

    @property
    def horizon(self) -> int:
        return len(self.rep) - 1

    def level(self, t: int) -> list:
        return self.store.sort_level(frozenset(self.rep[t])) if t >= 0 else (ROOT,)

    def classes(self, t: int) -> list:
        """Partition of processes (1-based) into level-``t`` classes."""
        groups = {}
        for p, v in enumerate(self.rep[t], start=1):
            groups.setdefault(v, []).append(p)
        return sorted(groups.values())

    def view_of(self, node: int) -> View:
        return extract_view(self, node)

    def process_view(self, t: int, p: int) -> View:
        """View of process ``p`` (1-based) at round ``t``."""
        return extract_view(self, self.rep[t][p - 1])


def build_ground_truth(schedule: Schedule, inputs: Sequence[ProcessInput],
                       horizon: int | None = None) -> HistoryTree:
    """Build levels -1..horizon by refining process classes on observations."""
    n = schedule.n
    if len(inputs) != n:
        raise ValueError(f"{len(inputs)} inputs for {n} processes")
    h = schedule.horizon if horizon is None else horizon
    if h > schedule.horizon:
        raise ValueError("horizon exceeds the schedule length")
    store = NodeStore()
    anonymity = Counter({ROOT: n})
    cur = [store.intern(ROOT, label=x) for x in inputs]
    anonymity.update(cur)
    rep = [cur]
    for i in range(1, h + 1):
        obs = [Counter() for _ in range(n)]
        for a, b, m in schedule.round(i):
            obs[a - 1][cur[b - 1]] += m
            obs[b - 1][cur[a - 1]] += m
        cur = [store.intern(cur[p], obs[p]) for p in range(n)]
        anonymity.update(cur)
        rep.append(cur)
    return HistoryTree(store, n, rep, dict(anonymity))


def extract_view(tree: HistoryTree, node: int) -> View:
    """View of ``node``: everything on ascending paths ending at ``node``.

    The closure of a node is the node plus the closures of its parent and of
    its red upper neighbours; results are memoized per node.
    """
    memo = tree._views
    if node in memo:
        return memo[node]
    store = tree.store
    # settle upper levels first so recursion stays shallow
    pending = [node]
    order = []
    seen = set()
    while pending:
        v = pending.pop()
        if v in seen or v in memo:
            continue
        seen.add(v)
        order.append(v)
        if v != ROOT:
            pending.append(store.parent[v])
            pending.extend(u for u, _ in store.red_in[v])
    for v in sorted(order, key=store.level.__getitem__):
        if v == ROOT:
            memo[v] = root_view(store)
            continue
        levels = list(memo[store.parent[v]].levels)
        for u, _ in store.red_in[v]:
            _union_levels(levels, memo[u].levels)
        levels.append(frozenset([v]))
        memo[v] = View(store, levels)
    return memo[node]


class HorizonExhausted(RuntimeError):
    """Raised or reported when a run needs rounds beyond the stored schedule."""


@dataclass
class SimulationResult:
    """``views[t][p]`` is the view of process ``p + 1`` after round ``t``."""

    schedule: Schedule
    inputs: tuple
    views: list
    outputs: list | None = None
    terminated_at: list | None = None
    horizon_exhausted: bool = False

    @property
    def horizon(self) -> int:
        return len(self.views) - 1


def simulate(schedule: Schedule, inputs: Sequence[ProcessInput],
             task: Callable | None = None, horizon: int | None = None,
             terminating: bool = False, store: NodeStore | None = None) -> SimulationResult:
    """Synchronous execution of the view-construction algorithm.

    Each round every process broadcasts its current view over all incident
    links and merges what it receives. If ``task`` is given, ``task(view)``
    is the process output after every round; with ``terminating=True`` the
    task returns ``(output, done)`` and a process's output is frozen from the
    first round with ``done``. Views keep being built after termination, so
    the message flow is that of the underlying history tree.
    """
    n = schedule.n
    if len(inputs) != n:
        raise ValueError(f"{len(inputs)} inputs for {n} processes")
    h = schedule.horizon if horizon is None else horizon
    if h > schedule.horizon:
        raise HorizonExhausted(f"horizon {h} exceeds the {schedule.horizon} stored rounds")
    store = NodeStore() if store is None else store
    cur = [initial_view(store, x) for x in inputs]
    views = [cur]
    for i in range(1, h + 1):
        inbox = [Counter() for _ in range(n)]
        for a, b, m in schedule.round(i):
            inbox[a - 1][b - 1] += m
            inbox[b - 1][a - 1] += m
        nxt = []
        memo = {}
        for p in range(n):
            # processes with equal views that hear equal views compute equal results
            received = Counter()
            for q, m in inbox[p].items():
                received[cur[q].viewpoint] += m
            key = (cur[p].viewpoint, frozenset(received.items()))
            if key not in memo:
                by_vp = {cur[q].viewpoint: cur[q] for q in inbox[p]}
                memo[key] = merge_view(cur[p], [(by_vp[vp], m) for vp, m in sorted(received.items())])
            nxt.append(memo[key])
        cur = nxt
        views.append(cur)
    result = SimulationResult(schedule, tuple(inputs), views)
    if task is not None:
        _run_task(result, task, terminating)
    return result


def _run_task(result: SimulationResult, task: Callable, terminating: bool) -> None:
    n = result.schedule.n
    outputs = []
    done_at = [None] * n
    cache = {}
    for t, row in enumerate(result.views):
        out_row = []
        for p, view in enumerate(row):
            if terminating and done_at[p] is not None:
                out_row.append(outputs[-1][p])
                continue
            vp = view.viewpoint
            if vp not in cache:
                cache[vp] = task(view)
            value = cache[vp]
            if terminating:
                value, done = value
                if done:
                    done_at[p] = t
            out_row.append(value)
        outputs.append(out_row)
    result.outputs = outputs
    if terminating:
        result.terminated_at = done_at
        result.horizon_exhausted = any(d is None for d in done_at)
