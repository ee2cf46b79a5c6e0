"""Reproducible experiments: build a network, simulate, judge against ground truth.

A run produces a :class:`RunReport` and a JSONL trace. Sweeps fan runs out
over worker processes (``ANONDYN_JOBS`` or ``jobs=``) and return reports in
config order.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

from . import oracles
from .equations import find_equations, rank
from .history import HistoryTree, NodeStore, build_ground_truth, extract_view, simulate
from .leaderless import (UNKNOWN, average_consensus, mean, stabilizing_concentration,
                         terminating_concentration)
from .leaders import counting_with_leaders, stabilizing_gc, terminating_gc
from .network import (block_reduce, gen_cycle_with_one_marked, gen_leader_ring, gen_random_inputs,
                      gen_random_schedule, gen_scale_family, load_inputs, load_schedule,
                      validate_disconnectivity)

FAMILIES = ("random", "scale", "leader-ring", "marked-cycle", "file")
TASKS = ("concentration", "average", "gc-count")
MODES = ("stabilizing", "terminating")


class ConfigError(ValueError):
    """An experiment configuration that cannot be run as given."""


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "random"
    task: str = "concentration"
    mode: str = "stabilizing"
    n: int = 4
    T: int = 1
    N: int | None = None
    leaders: int = 0
    seed: int = 0
    horizon: int | None = None
    blocks: int | None = None      # random family: schedule length in blocks
    values: int = 2                # random family: distinct input values
    sizes: tuple = (3, 4)          # scale family
    alpha: int = 1
    k: int = 3                     # leader-ring family
    i: int = 3
    t: int = 2                     # marked-cycle family
    schedule_path: str | None = None  # file family
    inputs_path: str | None = None
    oracles: bool = True
    trace_path: str | None = None

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.T < 1:
            raise ConfigError("T must be positive")
        if self.family == "random":
            if self.n < 1:
                raise ConfigError("n must be positive")
            if not 0 <= self.leaders <= self.n:
                raise ConfigError("leader count must be between 0 and n")
        if self.family == "file" and not (self.schedule_path and self.inputs_path):
            raise ConfigError("the file family needs a schedule and an inputs file")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        ell = self.leader_count()
        if self.task == "gc-count" and ell < 1:
            raise ConfigError("gc-count needs at least one leader")
        if self.mode == "terminating" and self.task != "gc-count":
            if self.N is None:
                raise ConfigError("terminating concentration needs an upper bound N")
            if self.N < self.process_count():
                raise ConfigError(f"N={self.N} is below the process count")

    def process_count(self) -> int:
        if self.family == "random":
            return self.n
        if self.family == "scale":
            return self.alpha * sum(self.sizes)
        if self.family == "leader-ring":
            return self.k * self.i
        if self.family == "file":
            return _load(self)[0].n
        return 2 * self.t + 2

    def leader_count(self) -> int:
        if self.family == "random":
            return self.leaders
        if self.family == "leader-ring":
            return self.i
        if self.family == "file":
            return sum(x.leader for x in _load(self)[1])
        return 0

    def bound(self) -> tuple:
        """``(name, rounds)`` of the round bound this run is judged by."""
        n, T, ell = self.process_count(), self.T, self.leader_count()
        if self.mode == "stabilizing":
            return "2Tn", 2 * T * n
        if self.task == "gc-count":
            return "(l^2+l+1)Tn", (ell * ell + ell + 1) * T * n
        return "T(n+N)", T * (n + self.N)

    def effective_horizon(self) -> int:
        if self.horizon is not None:
            return self.horizon
        _, b = self.bound()
        return b + self.T if self.mode == "stabilizing" else b


@dataclass
class RunReport:
    config: ExperimentConfig
    n: int
    ell: int
    horizon: int
    bound_name: str
    bound: int
    stabilization_round: int | None
    termination_round: int | None
    bound_satisfied: bool
    checks_passed: list
    checks_failed: list
    stats: dict
    trace: list = field(repr=False, default_factory=list)
    horizon_exhausted: bool = False

    @property
    def ok(self) -> bool:
        return self.bound_satisfied and not self.checks_failed

    def summary(self) -> dict:
        return {
            "config": {k: v for k, v in asdict(self.config).items() if k != "trace_path"},
            "n": self.n, "leaders": self.ell, "horizon": self.horizon,
            "bound": self.bound_name, "bound_rounds": self.bound,
            "stabilization_round": self.stabilization_round,
            "termination_round": self.termination_round,
            "bound_satisfied": self.bound_satisfied,
            "horizon_exhausted": self.horizon_exhausted,
            "checks_passed": self.checks_passed, "checks_failed": self.checks_failed,
            "stats": self.stats,
        }


def run_seed(*parts) -> int:
    """Stable 32-bit seed derived from any printable parts."""
    return int.from_bytes(hashlib.sha256(repr(parts).encode()).digest()[:4], "big")


def _load(config: ExperimentConfig):
    try:
        return load_schedule(config.schedule_path), load_inputs(config.inputs_path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"cannot read network files: {e}") from e


def build_network(config: ExperimentConfig, horizon: int):
    if config.family == "random":
        blocks = config.blocks if config.blocks is not None else -(-horizon // config.T)
        blocks = max(blocks, -(-horizon // config.T), 1)
        schedule = gen_random_schedule(config.n, config.T, blocks, config.seed)
        inputs = gen_random_inputs(config.n, config.leaders, config.seed, config.values)
        return schedule, inputs
    if config.family == "file":
        schedule, inputs = _load(config)
        if horizon > schedule.horizon:
            raise ConfigError(f"horizon {horizon} exceeds the {schedule.horizon} stored rounds")
        if len(inputs) != schedule.n:
            raise ConfigError("inputs file does not match the schedule's process count")
        return schedule, inputs
    rounds = max(horizon, config.T)
    if config.family == "scale":
        return gen_scale_family(config.sizes, config.alpha, rounds)
    if config.family == "leader-ring":
        return gen_leader_ring(config.k, config.i, rounds)
    (schedule, inputs), _ = gen_cycle_with_one_marked(config.t, rounds)
    return schedule, inputs


def format_output(out):
    """JSON-ready rendering of a task output; exact values become strings."""
    if out is UNKNOWN:
        return "Unknown"
    if isinstance(out, dict):
        return {str(z): str(v) for z, v in sorted(out.items())}
    return str(out)


def node_map(src: NodeStore, dst: NodeStore) -> list:
    """``m[v]`` is the node of ``dst`` with the structure of node ``v`` of ``src``."""
    m = [0] * len(src)
    for v in range(1, len(src)):
        if src.level[v] == 0:
            m[v] = dst.find(0, label=src.label[v])
            continue
        p = m[src.parent[v]]
        red = [(m[u], k) for u, k in src.red_in[v]]
        m[v] = None if p is None or None in (u for u, _ in red) else dst.find(p, red)
    return m


class _Checks:
    def __init__(self):
        self.status = {}
        self.stats = Counter()

    def record(self, name: str, ok: bool):
        self.status[name] = self.status.get(name, True) and bool(ok)

    def lists(self):
        passed = [k for k, v in self.status.items() if v]
        failed = [k for k, v in self.status.items() if not v]
        return passed, failed


def _history_checks(chk: _Checks, sim, gt: HistoryTree, outputs, schedule, inputs, T):
    h = sim.horizon
    if schedule.horizon >= T:
        chk.record("disconnectivity", validate_disconnectivity(schedule, T))
    classes = oracles.refinement_classes(schedule, inputs, h)
    chk.record("refinement-classes", all(classes[t] == gt.classes(t) for t in range(h + 1)))
    seen = {}
    for t in range(h + 1):
        distinct = {v.viewpoint for v in sim.views[t]}
        chk.record("class-count", len(distinct) == len(set(gt.rep[t])))
        for p, view in enumerate(sim.views[t]):
            key = (view.viewpoint, gt.rep[t][p])
            if key not in seen:
                seen[key] = view.canonical_form() == extract_view(gt, key[1]).canonical_form()
            chk.record("views-match-ground-truth", seen[key])
        if outputs is not None:
            by_node = {}
            for p, out in enumerate(outputs[t]):
                by_node.setdefault(gt.rep[t][p], []).append(out)
            chk.record("same-node-same-output",
                       all(all(o == outs[0] for o in outs) for outs in by_node.values()))


def _equation_checks(chk: _Checks, sim, gt: HistoryTree, T: int, n: int):
    nm = node_map(sim.views[0][0].store, gt.store)
    done = set()
    for t in range(2 * T * n, sim.horizon + 1):
        for view in sim.views[t]:
            if view.viewpoint in done:
                continue
            done.add(view.viewpoint)
            lvl, system = find_equations(view)
            chk.stats["equation_views"] += 1
            ok = 0 <= lvl <= T * n
            if ok:
                truth = [gt.anonymity[nm[v]] for v in view.level(lvl)]
                ok = rank(system) == system.k - 1 and system.satisfied_by(truth)
            chk.record("equation-system", ok)


def _stabilization_round(outputs, truth):
    """First round from which every output equals ``truth``, or None."""
    r = len(outputs)
    for t in range(len(outputs) - 1, -1, -1):
        if all(o == truth for o in outputs[t]):
            r = t
        else:
            break
    return r if r < len(outputs) else None


def _approx_checks(chk: _Checks, view, transcript, rgt: HistoryTree, nm, n: int, ell: int):
    """Level range, leader total, exactness and guess soundness for one view's ApproxCount calls."""
    depth = view.depth
    st = chk.stats
    for res in transcript:
        if res.tau is None:
            continue
        a = lambda v: rgt.anonymity[nm[v]]
        delta = Fraction(res.x, a(res.tau))
        st["approx_calls"] += 1
        if depth >= res.s + (ell + 2) * n - 1:
            st["approx_range_cases"] += 1
            chk.record("approx-level-range", res.s <= res.t <= res.s + (ell + 1) * n - 1)
        if res.x == a(res.tau) and depth >= res.t + n:
            st["approx_leader_cases"] += 1
            chk.record("approx-leader-total", res.n_est != -3)
        if res.x >= a(res.tau) and res.n_est > 0 and depth >= res.t + res.n_est:
            st["approx_exact_cases"] += 1
            chk.record("approx-exact-estimate", res.n_est == n)
        for v, g, u in res.guesses:
            sound = g >= delta * a(v)
            st["guesses"] += 1
            st["guesses_unsound"] += not sound
            kids = view.children(u)
            # guess soundness presumes the guesser's children are all present
            # and carry their true conditional anonymities
            if len(kids) == len(rgt.store.children[nm[u]]) and \
                    all(res.counted[c] == delta * a(c) for c in kids):
                st["guesses_hypothesis"] += 1
                chk.record("guess-soundness", sound)
        for v, av in res.counted.items():
            st["counted"] += 1
            st["counted_off"] += av != delta * a(v)


def run_experiment(config: ExperimentConfig) -> RunReport:
    config.validate()
    h = config.effective_horizon()
    try:
        schedule, inputs = build_network(config, h)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e
    n, ell, T = schedule.n, sum(x.leader for x in inputs), config.T
    if ell != config.leader_count() and config.family == "random":
        raise ConfigError("generated leader count does not match the config")
    bound_name, bound = config.bound()
    chk = _Checks()

    if config.task == "concentration":
        truth = oracles.concentration_truth(inputs)
    elif config.task == "average":
        truth = oracles.mean_truth(inputs)
    else:
        truth = oracles.count_truth(inputs)

    phases = {}
    stab = term = None
    exhausted = False
    if config.mode == "stabilizing":
        task = {"concentration": stabilizing_concentration, "average": average_consensus,
                "gc-count": lambda v: stabilizing_gc(v, ell)}[config.task]
        sim = simulate(schedule, inputs, task=task, horizon=h)
        outputs = sim.outputs
        stab = _stabilization_round(outputs, truth)
        satisfied = stab is not None and stab <= bound
        exhausted = h < bound
    elif config.task != "gc-count":
        average = config.task == "average"

        def task(v):
            out, done = terminating_concentration(v, T, config.N)
            return (mean(None, out) if average and out is not UNKNOWN else out), done

        sim = simulate(schedule, inputs, task=task, horizon=h, terminating=True)
        outputs = sim.outputs
        exhausted = sim.horizon_exhausted
        done = sim.terminated_at
        term = None if exhausted else max(done)
        satisfied = (not exhausted and term <= bound
                     and all(outputs[done[p]][p] == truth for p in range(n)))
    else:
        sim = simulate(schedule, inputs, horizon=h)
        red = block_reduce(schedule, T)
        H = h // T
        rsim = simulate(red, inputs, horizon=H)
        counts = {}

        def count(view, ell_):
            vp = view.viewpoint
            if vp not in counts:
                transcript = []
                counts[vp] = (counting_with_leaders(view, ell_, transcript), transcript)
            return counts[vp][0]

        outputs = [[UNKNOWN] * n for _ in range(h + 1)]
        done = []
        for p in range(n):
            out, when = terminating_gc([row[p] for row in rsim.views],
                                       [row[p] for row in sim.views], ell, T, count)
            done.append(when)
            if when is not None:
                for t in range(when, h + 1):
                    outputs[t][p] = out
        exhausted = None in done
        term = None if exhausted else max(done)
        satisfied = (not exhausted and term <= bound
                     and all(outputs[done[p]][p] == truth for p in range(n)))
        # every count any process could compute, at every reduced round
        rgt = build_ground_truth(red, inputs, H) if config.oracles else None
        rmap = node_map(rsim.views[0][0].store, rgt.store) if rgt else None
        checked = set()
        for r, row in enumerate(rsim.views):
            for p, view in enumerate(row):
                c = count(view, ell)
                chk.record("counting-soundness", c is UNKNOWN or c == n)
                prev = rsim.views[r - 1][p].viewpoint if r else None
                # a later view can push the final acceptance check out of reach
                if prev is not None and counts[prev][0] == n and c != n:
                    chk.stats["count_regressions"] += 1
                phases[(r * T, p)] = [[res.s, res.x, res.n_est, res.t] for res in counts[view.viewpoint][1]]
                if rgt is not None and view.viewpoint not in checked:
                    checked.add(view.viewpoint)
                    _approx_checks(chk, view, counts[view.viewpoint][1], rgt, rmap, n, ell)

    if config.oracles:
        gt = build_ground_truth(schedule, inputs, h)
        _history_checks(chk, sim, gt, outputs, schedule, inputs, T)
        if config.mode == "stabilizing" or config.task != "gc-count":
            _equation_checks(chk, sim, gt, T, n)

    passed, failed = chk.lists()
    report = RunReport(config, n, ell, h, bound_name, bound, stab, term, satisfied,
                       passed, failed, dict(sorted(chk.stats.items())), [], exhausted)
    report.trace = _trace(sim, outputs, phases, report)
    if config.trace_path:
        with open(config.trace_path, "w") as f:
            f.writelines(line + "\n" for line in report.trace)
    return report


def _trace(sim, outputs, phases, report: RunReport) -> list:
    lines = []
    digests = {}
    for t, row in enumerate(sim.views):
        for p, view in enumerate(row):
            vp = view.viewpoint
            if vp not in digests:
                digests[vp] = view.digest()
            rec = {"round": t, "process": p + 1, "view": digests[vp],
                   "output": format_output(outputs[t][p])}
            if (t, p) in phases:
                rec["phases"] = phases[(t, p)]
            lines.append(json.dumps(rec, sort_keys=True))
    lines.append(json.dumps({"summary": report.summary()}, sort_keys=True))
    return lines


# -- sweeps ------------------------------------------------------------------

def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("ANONDYN_JOBS", "1")))
    except ValueError:
        return 1


def run_many(configs, jobs: int | None = None) -> list:
    """Run every config; reports come back in config order."""
    configs = list(configs)
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(configs) < 2:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_experiment, configs, chunksize=4))


def leaderless_configs(max_n=8, Ts=(1, 2, 3), trials=20, seed=0,
                       N_offset: int | None = None, **overrides) -> list:
    """One random schedule per (n, T, trial); schedules are long enough for
    ``N = n + 3`` so every mode of the sweep sees the same network. With
    ``N_offset`` the runs terminate with ``N = n + N_offset``."""
    out = []
    for n in range(1, max_n + 1):
        for T in Ts:
            for k in range(trials):
                cfg = ExperimentConfig(n=n, T=T, seed=run_seed(seed, "leaderless", n, T, k),
                                       blocks=2 * n + 3)
                if N_offset is not None:
                    cfg = replace(cfg, mode="terminating", N=n + N_offset)
                out.append(replace(cfg, **overrides))
    return out


def leader_configs(max_n=6, ells=(1, 2, 3), Ts=(1, 2), trials=20, seed=0, **overrides) -> list:
    out = []
    for n in range(1, max_n + 1):
        for ell in ells:
            if ell > n:
                continue
            for T in Ts:
                for k in range(trials):
                    cfg = ExperimentConfig(n=n, T=T, leaders=ell, task="gc-count",
                                           seed=run_seed(seed, "leaders", n, ell, T, k),
                                           blocks=(ell * ell + ell + 1) * n + 1)
                    out.append(replace(cfg, **overrides))
    return out


@dataclass
class VerifySummary:
    runs: int
    failures: list
    checks: dict
    stats: dict

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list:
        out = [f"runs: {self.runs}"]
        out += [f"{name}: {bad} failing of {total}" for name, (bad, total) in sorted(self.checks.items())]
        out += [f"{k}: {v}" for k, v in sorted(self.stats.items())]
        out += [f"FAIL {f}" for f in self.failures[:20]]
        out.append("all checks passed" if self.ok else f"{len(self.failures)} failing runs")
        return out


def verify_suite(max_n: int, max_T: int, max_ell: int, trials: int, seed: int,
                 jobs: int | None = None) -> VerifySummary:
    """Invariant battery over random runs: oracle equivalence, equation and
    ApproxCount guarantees, round bounds and soundness."""
    Ts = tuple(range(1, max_T + 1))
    configs = []
    configs += leaderless_configs(max_n, Ts, trials, seed)
    configs += leaderless_configs(max_n, Ts, trials, seed, N_offset=0)
    if max_ell >= 1:
        ells = tuple(range(1, max_ell + 1))
        configs += leader_configs(max_n, ells, Ts, trials, seed)
        configs += leader_configs(max_n, ells, Ts, trials, seed, mode="terminating")
    reports = run_many(configs, jobs)
    failures, checks, stats = [], {}, Counter()
    for rep in reports:
        for name in ["bound"] + rep.checks_passed + rep.checks_failed:
            bad, total = checks.get(name, (0, 0))
            failed = (not rep.bound_satisfied) if name == "bound" else name in rep.checks_failed
            checks[name] = (bad + failed, total + 1)
        stats.update(rep.stats)
        if not rep.ok:
            c = rep.config
            why = rep.checks_failed + ([] if rep.bound_satisfied else ["bound"])
            failures.append(f"{c.task}/{c.mode} n={c.n} T={c.T} leaders={c.leaders} "
                            f"seed={c.seed}: {', '.join(why)}")
    return VerifySummary(len(reports), failures, checks, dict(sorted(stats.items())))
