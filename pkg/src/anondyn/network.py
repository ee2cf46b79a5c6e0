"""Dynamic networks: schedules of round multigraphs, inputs, and generators.

Processes are numbered 1..n. A schedule stores a finite prefix of the
network; rounds past the stored horizon are treated as empty.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence


@dataclass(frozen=True, order=True)
class ProcessInput:
    """Input of one process: an opaque value token plus the leader flag."""

    value: str
    leader: bool = False

    def __str__(self):
        return f"{'L' if self.leader else 'N'}:{self.value}"


InputAssignment = tuple  # tuple[ProcessInput, ...], one entry per process


@dataclass(frozen=True)
class RoundGraph:
    """Undirected multigraph of one round as sorted ``(i, j, mult)`` triples, i < j."""

    edges: tuple = ()

    @classmethod
    def from_edges(cls, edges: Iterable) -> "RoundGraph":
        counts: Counter = Counter()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            m = int(e[2]) if len(e) > 2 else 1
            if i == j:
                raise ValueError(f"self-loop on process {i}")
            if m < 1:
                raise ValueError(f"multiplicity must be positive, got {m}")
            counts[(min(i, j), max(i, j))] += m
        return cls(tuple((i, j, m) for (i, j), m in sorted(counts.items())))

    def __iter__(self):
        return iter(self.edges)

    def __len__(self):
        return len(self.edges)

    def multiplicity(self, i: int, j: int) -> int:
        a, b = min(i, j), max(i, j)
        for x, y, m in self.edges:
            if (x, y) == (a, b):
                return m
        return 0

    def total(self) -> int:
        return sum(m for _, _, m in self.edges)

    def union(self, other: "RoundGraph") -> "RoundGraph":
        return RoundGraph.from_edges(list(self.edges) + list(other.edges))


EMPTY_ROUND = RoundGraph()


@dataclass(frozen=True)
class Schedule:
    n: int
    rounds: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a schedule needs at least one process")
        object.__setattr__(self, "rounds", tuple(
            r if isinstance(r, RoundGraph) else RoundGraph.from_edges(r) for r in self.rounds))
        for t, g in enumerate(self.rounds, start=1):
            for i, j, _ in g:
                if not (1 <= i <= self.n and 1 <= j <= self.n):
                    raise ValueError(f"round {t}: edge ({i}, {j}) outside 1..{self.n}")

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    def round(self, t: int) -> RoundGraph:
        """Topology of round ``t`` (1-based); empty past the horizon."""
        if t < 1:
            raise ValueError("rounds are numbered from 1")
        return self.rounds[t - 1] if t <= len(self.rounds) else EMPTY_ROUND


def _connected(n: int, graphs: Iterable[RoundGraph]) -> bool:
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    components = n
    for g in graphs:
        for i, j, _ in g:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                components -= 1
    return components == 1


def validate_disconnectivity(schedule: Schedule, T: int) -> bool:
    """True iff every window of ``T`` consecutive rounds has a connected union."""
    if T <= 0:
        raise ValueError("T must be positive")
    if T > schedule.horizon:
        raise ValueError(f"T={T} exceeds the {schedule.horizon} stored rounds")
    return all(_connected(schedule.n, schedule.rounds[i:i + T])
               for i in range(schedule.horizon - T + 1))


def block_reduce(schedule: Schedule, T: int) -> Schedule:
    """Merge every block of ``T`` rounds into one round (multiplicities add).

    A trailing partial block is padded with empty rounds.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    blocks = []
    for start in range(0, schedule.horizon, T):
        blocks.append(reduce(RoundGraph.union, schedule.rounds[start:start + T], EMPTY_ROUND))
    return Schedule(schedule.n, tuple(blocks))


def _random_tree(n: int, rng: random.Random) -> list:
    # uniform labelled tree from a random Prufer sequence
    if n == 1:
        return []
    if n == 2:
        return [(1, 2)]
    seq = [rng.randint(1, n) for _ in range(n - 2)]
    degree = Counter(seq)
    edges = []
    for a in seq:
        leaf = min(v for v in range(1, n + 1) if degree[v] == 0)
        edges.append((leaf, a))
        degree[leaf] = -1
        degree[a] -= 1
    u, w = [v for v in range(1, n + 1) if degree[v] == 0]
    edges.append((u, w))
    return edges


def _random_pair(n: int, rng: random.Random) -> tuple:
    i, j = rng.sample(range(1, n + 1), 2)
    return i, j


def gen_random_schedule(n: int, T: int, num_blocks: int, seed: int,
                        extra_edge_p: float = 0.5) -> Schedule:
    """Random T-interval-disconnected schedule of ``num_blocks * T`` rounds.

    Connected rounds (a uniform spanning tree plus a geometric number of
    extra, possibly parallel, edges) are placed at random positions whose
    gaps never exceed ``T``, so every window of ``T`` rounds contains one.
    Every other round gets a geometric number of random edges, often none.
    """
    if n < 1 or T < 1:
        raise ValueError("need n >= 1 and T >= 1")
    rng = random.Random(seed)
    h = num_blocks * T
    if n == 1:
        return Schedule(1, tuple(EMPTY_ROUND for _ in range(h)))

    def extras():
        out = []
        while rng.random() < extra_edge_p:
            out.append(_random_pair(n, rng))
        return out

    connected_at = set()
    pos = rng.randint(1, T)
    while pos <= h:
        connected_at.add(pos)
        pos += rng.randint(1, T)
    # the last window must contain a connected round too
    if h and max(connected_at, default=0) < h - T + 1:
        connected_at.add(h)

    rounds = []
    for t in range(1, h + 1):
        edges = extras()
        if t in connected_at:
            edges += _random_tree(n, rng)
        rounds.append(RoundGraph.from_edges(edges))
    return Schedule(n, tuple(rounds))


def static_schedule(n: int, edges: Iterable, rounds: int) -> Schedule:
    g = RoundGraph.from_edges(edges)
    return Schedule(n, tuple(g for _ in range(rounds)))


def cycle_edges(vertices: Sequence[int]) -> list:
    k = len(vertices)
    return [(vertices[a], vertices[(a + 1) % k]) for a in range(k)]


def gen_scale_family(partite_sizes: Sequence[int], alpha: int, rounds: int):
    """``alpha`` copies of the complete multipartite graph on ``partite_sizes``,
    plus one cycle per part through all copies of that part.

    Processes in copies of part ``i`` get input ``z{i}`` (1-based).
    """
    sizes = [int(m) for m in partite_sizes]
    if not sizes or any(m <= 2 for m in sizes):
        raise ValueError("every part needs more than 2 processes")
    if reduce(math.gcd, sizes) != 1:
        raise ValueError("part sizes must have gcd 1")
    if alpha < 1:
        raise ValueError("alpha must be positive")
    k = len(sizes)
    parts = [[] for _ in range(k)]  # parts[i][copy] = process ids
    pid = 1
    for _ in range(alpha):
        for i, m in enumerate(sizes):
            parts[i].append(list(range(pid, pid + m)))
            pid += m
    n = pid - 1
    edges = []
    for c in range(alpha):
        for i in range(k):
            for j in range(i + 1, k):
                edges += [(p, q) for p in parts[i][c] for q in parts[j][c]]
    for i in range(k):
        edges += cycle_edges([p for copy in parts[i] for p in copy])
    inputs = [None] * n
    for i in range(k):
        for copy in parts[i]:
            for p in copy:
                inputs[p - 1] = ProcessInput(f"z{i + 1}")
    return static_schedule(n, edges, rounds), tuple(inputs)


def gen_leader_ring(k: int, i: int, rounds: int):
    """Cycle of ``k*i`` processes with ``i`` evenly spaced leaders at 1, 1+k, ..."""
    if i < 3:
        raise ValueError("need i >= 3")
    if k < 1:
        raise ValueError("need k >= 1")
    n = k * i
    inputs = tuple(ProcessInput("z", leader=(p - 1) % k == 0) for p in range(1, n + 1))
    return static_schedule(n, cycle_edges(list(range(1, n + 1))), rounds), inputs


def gen_cycle_with_one_marked(t: int, rounds: int | None = None):
    """Cycle of ``2t+2`` processes, input 1 at process 1 and 0 elsewhere.

    Returns ``((schedule, inputs), (companion_schedule, companion_inputs))``
    where the companion is the all-zero 3-cycle.
    """
    if t < 1:
        raise ValueError("need t >= 1")
    h = t if rounds is None else rounds
    n = 2 * t + 2
    inputs = tuple(ProcessInput("1" if p == 1 else "0") for p in range(1, n + 1))
    main = (static_schedule(n, cycle_edges(list(range(1, n + 1))), h), inputs)
    companion = (static_schedule(3, cycle_edges([1, 2, 3]), h), (ProcessInput("0"),) * 3)
    return main, companion


def gen_random_inputs(n: int, leaders: int, seed: int, values: int = 2) -> tuple:
    """Random numeric-string inputs with exactly ``leaders`` leader flags."""
    if not 0 <= leaders <= n:
        raise ValueError("leader count out of range")
    rng = random.Random(seed)
    flagged = set(rng.sample(range(n), leaders))
    return tuple(ProcessInput(str(rng.randrange(values)), p in flagged) for p in range(n))


def inventory(inputs: Sequence[ProcessInput]) -> dict:
    """The multiset of all inputs as ``{input: multiplicity}``."""
    return dict(sorted(Counter(inputs).items()))


# -- JSON files --------------------------------------------------------------

def schedule_to_json(schedule: Schedule) -> dict:
    return {"n": schedule.n, "rounds": [[list(e) for e in g] for g in schedule.rounds]}


def schedule_from_json(data: dict) -> Schedule:
    return Schedule(int(data["n"]), tuple(RoundGraph.from_edges(r) for r in data["rounds"]))


def inputs_to_json(inputs: Sequence[ProcessInput]) -> dict:
    return {"inputs": [{"value": x.value, "leader": x.leader} for x in inputs]}


def inputs_from_json(data: dict) -> tuple:
    return tuple(ProcessInput(str(x["value"]), bool(x.get("leader", False)))
                 for x in data["inputs"])


def dump_schedule(schedule: Schedule, path) -> None:
    with open(path, "w") as f:
        json.dump(schedule_to_json(schedule), f)


def load_schedule(path) -> Schedule:
    with open(path) as f:
        return schedule_from_json(json.load(f))


def dump_inputs(inputs, path) -> None:
    with open(path, "w") as f:
        json.dump(inputs_to_json(inputs), f)


def load_inputs(path) -> tuple:
    with open(path) as f:
        return inputs_from_json(json.load(f))
