"""Generalized counting with a known number of leaders.

``approx_count`` infers conditional anonymities from one leader strand,
``counting_with_leaders`` turns its estimates into a certified count, and the
``*_gc`` functions produce the full multiset of inputs.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .history import ROOT, View
from .leaderless import UNKNOWN, label_weights


def guess_value(child_anons, child_mults, m: int) -> int:
    """Ceiling of ``sum(a_i * m_i) / m``: a guess that never underestimates."""
    if m < 1:
        raise ValueError("the guessing red edge needs a positive multiplicity")
    total = sum(a * k for a, k in zip(child_anons, child_mults))
    return -(-total // m)


@dataclass
class ApproxResult:
    """Outcome ``(n_est, t)`` of one ``approx_count`` call plus its bookkeeping.

    ``n_est`` is a positive estimate or an error code: -1 (no leader at level
    ``s``), -2 (no counting cut), -3 (leader total differs from ``ell``).
    ``guesses`` lists ``(node, guess, guesser)`` in assignment order and
    ``counted`` maps every node marked counted to its conditional anonymity.
    """

    n_est: int
    t: int
    s: int
    x: int
    tau: int | None = None
    guesses: list = field(default_factory=list)
    counted: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.n_est, self.t))


class _Approx:
    """Scratch state of one ApproxCount run."""

    def __init__(self, view: View, s: int):
        self.view = view
        self.s = s
        self.a = {}
        self.counted = set()
        self.guess = {}
        self.weight = Counter()
        self.locked = {}
        self.guessers = set()
        # guess candidates per level, sorted by (rank v, rank guesser); a
        # guesser stays one and counted nodes stay counted, so entries only
        # ever go stale by their node getting counted
        self.candidates = {}
        # view leaves without a counted node on their path from the root
        self.uncovered = sum(1 for v in view.nodes() if not view.children(v))

    # -- structure helpers
    def path_up(self, v):
        """``v`` and its ancestors down to level ``s``, deepest first."""
        view, s = self.view, self.s
        while v != ROOT and view.node_level(v) >= s:
            yield v
            v = view.parent(v)

    def frontier(self, top):
        """First counted nodes strictly below ``top`` on every downward path.

        Returns ``(cut, internal)`` or None if some leaf of the view below
        ``top`` is reached without meeting a counted node.
        """
        view, counted = self.view, self.counted
        cut, internal = [], []
        stack = list(view.children(top))
        if not stack:
            return None
        while stack:
            v = stack.pop()
            if v in counted:
                cut.append(v)
                continue
            kids = view.children(v)
            if not kids:
                return None
            internal.append(v)
            stack.extend(kids)
        return cut, internal

    # -- flags
    def _refresh_guesser(self, u):
        if u == ROOT or u in self.guessers or u not in self.counted:
            return
        kids = self.view.children(u)
        if kids and all(c in self.counted for c in kids) and \
                sum(self.a[c] for c in kids) == self.a[u]:
            self.guessers.add(u)
            view = self.view
            rank = view.store.rank
            ru = rank(u)
            for v in view.red_below(u):
                if view.parent(v) != u and v not in self.counted:
                    bisect.insort(self.candidates.setdefault(view.node_level(v), []),
                                  (rank(v), ru, v, u))

    def _cover(self, v):
        view, counted = self.view, self.counted
        u = view.parent(v)
        while u != ROOT:
            if u in counted:
                return
            u = view.parent(u)
        stack = [v]
        while stack:
            w = stack.pop()
            kids = view.children(w)
            if not kids:
                self.uncovered -= 1
            stack.extend(c for c in kids if c not in counted)

    def mark_counted(self, v, value):
        self.a[v] = value
        self._cover(v)
        self.counted.add(v)
        if v in self.guess:
            self.unguess(v)
        self._refresh_guesser(v)
        self._refresh_guesser(self.view.parent(v))

    def unguess(self, v):
        del self.guess[v]
        del self.locked[self.view.node_level(v)]
        for u in self.path_up(v):
            self.weight[u] -= 1

    def set_guess(self, v, g):
        self.guess[v] = g
        self.locked[self.view.node_level(v)] = v
        for u in self.path_up(v):
            self.weight[u] += 1

    # -- the main loop's pieces
    def next_guess(self):
        """Shallowest guessable node (ties by rank) and its lowest-ranked guesser."""
        for lvl in sorted(self.candidates):
            if lvl in self.locked:
                continue
            entries = self.candidates[lvl]
            while entries and entries[0][2] in self.counted:
                entries.pop(0)
            if entries:
                return entries[0][2:]
            del self.candidates[lvl]
        return None

    def compute_guess(self, v, u) -> int:
        view = self.view
        kids = view.children(u)
        vp = view.parent(v)
        return guess_value([self.a[c] for c in kids],
                           [view.red(c, vp) for c in kids], view.red(v, u))

    def resolve_isle(self, root) -> bool:
        """Count the internal nodes of the isle rooted at ``root`` if it is complete."""
        found = self.frontier(root)
        if found is None:
            return False
        cut, internal = found
        if not internal or sum(self.a[c] for c in cut) != self.a[root]:
            return False
        view = self.view
        # deepest first, so children are settled before their parents
        internal.sort(key=view.node_level, reverse=True)
        for w in internal:
            self.mark_counted(w, sum(self.a[c] for c in view.children(w)))
        return True

    def nearest_counted_ancestor(self, v):
        view = self.view
        u = view.parent(v)
        while u != ROOT:
            if u in self.counted:
                return u
            u = view.parent(u)
        return None


def approx_count(view: View, s: int, x: int, ell: int) -> ApproxResult:
    """Estimate ``n`` assuming the first leader node of level ``s`` has anonymity ``x``."""
    if s > view.depth or s < 0:
        return ApproxResult(-1, s, s, x)
    leaders = [v for v in view.level(s) if view.store.is_leader(v)]
    if not leaders:
        return ApproxResult(-1, s, s, x)
    tau = leaders[0]
    strand = [tau]
    while len(view.children(strand[-1])) == 1:
        strand.append(view.children(strand[-1])[0])

    st = _Approx(view, s)
    for v in strand:
        st.mark_counted(v, x)
    guesses = []

    while st.uncovered:
        pick = st.next_guess()
        if pick is None:
            break
        v, u = pick
        g = st.compute_guess(v, u)
        st.set_guess(v, g)
        guesses.append((v, g, u))
        heavy = next((w for w in st.path_up(v)
                      if w in st.guess and st.weight[w] >= st.guess[w]), None)
        if heavy is not None:
            st.mark_counted(heavy, st.guess[heavy])
            st.resolve_isle(heavy)
            above = st.nearest_counted_ancestor(heavy)
            if above is not None:
                st.resolve_isle(above)

    counted = {v: st.a[v] for v in st.counted}
    cut = st.frontier(ROOT) if not st.uncovered else None
    if cut is None:
        t = view.node_level(strand[-1])
        return ApproxResult(-2, t, s, x, tau, guesses, counted)
    nodes = cut[0]
    t = max(view.node_level(v) for v in nodes)
    n_est = sum(st.a[v] for v in nodes)
    ell_est = sum(st.a[v] for v in nodes if view.store.is_leader(v))
    if ell_est == ell:
        return ApproxResult(n_est, t, s, x, tau, guesses, counted)
    return ApproxResult(-3, t, s, x, tau, guesses, counted)


def _accept(n_star: int, s: int, last_level: int) -> bool:
    return n_star > 0 and last_level >= s - 1 + n_star


def counting_with_leaders(view: View, ell: int, transcript: list | None = None):
    """Number of processes, certified, or UNKNOWN.

    Runs ``ell`` phases of ``approx_count`` over disjoint level ranges, trying
    ``x = ell .. 1`` in each. Every call's result is appended to
    ``transcript`` when one is given.
    """
    if ell < 1:
        raise ValueError("need at least one leader")
    n_star, s = -1, 0
    for _ in range(ell):
        t_star = -1
        for x in range(ell, 0, -1):
            res = approx_count(view, s, x, ell)
            if transcript is not None:
                transcript.append(res)
            t_star = max(t_star, res.t)
            if res.n_est > 0:
                n_star = max(n_star, res.n_est)
                break
            if res.n_est == -1:
                return UNKNOWN
            if res.n_est == -2:
                break
        s = t_star + 1
    return n_star if _accept(n_star, s, view.depth) else UNKNOWN


def stabilizing_gc(view: View, ell: int):
    """``{input: multiplicity}`` over all processes, or UNKNOWN."""
    if ell < 1:
        raise ValueError("need at least one leader")
    beta = label_weights(view)
    if beta is None:
        return UNKNOWN
    beta_lead = sum(b for z, b in beta.items() if z.leader)
    if beta_lead == 0:
        return UNKNOWN
    out = {}
    for z, b in beta.items():
        gamma = ell * b / beta_lead
        if gamma.denominator != 1:
            return UNKNOWN
        out[z] = int(gamma)
    return out


def terminating_gc(reduced_views, views, ell: int, T: int,
                   count: Callable = counting_with_leaders):
    """Drive counting on the block-reduced views of one process.

    ``reduced_views[r]`` is the process's view after ``r`` rounds of the
    block-reduced network, ``views[t]`` its view after ``t`` original rounds.
    Once counting yields ``n`` at reduced round ``r``, the process waits until
    round ``max(r*T, 2*T*n)`` and outputs ``stabilizing_gc`` there. Returns
    ``(output, round)``, or ``(UNKNOWN, None)`` if the views run out first.
    ``count(view, ell)`` replaces the counting routine, e.g. with a cached one.
    """
    for r, rv in enumerate(reduced_views):
        n = count(rv, ell)
        if n is UNKNOWN:
            continue
        when = max(r * T, 2 * T * n)
        if when >= len(views):
            return UNKNOWN, None
        return stabilizing_gc(views[when], ell), when
    return UNKNOWN, None


def multi_aggregate_eval(gc_output: dict, psi: Callable, own):
    """``psi(own, multiset)`` on the full multiset of inputs."""
    if gc_output is UNKNOWN:
        raise ValueError("the count is not known yet")
    return psi(own, gc_output)


def total_count(own, multiset: dict) -> int:
    return sum(multiset.values())


def numeric_sum(own, multiset: dict) -> Fraction:
    return sum(Fraction(getattr(z, "value", z)) * m for z, m in multiset.items())


def median(own, multiset: dict) -> Fraction:
    """Lower median of the numeric inputs."""
    values = sorted(Fraction(getattr(z, "value", z)) for z, m in multiset.items()
                    for _ in range(m))
    return values[(len(values) - 1) // 2]
