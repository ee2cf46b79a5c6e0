"""Simulator and algorithms for anonymous dynamic networks built on history trees."""

from .network import (ProcessInput, RoundGraph, Schedule, block_reduce, gen_cycle_with_one_marked,
                      gen_leader_ring, gen_random_inputs, gen_random_schedule, gen_scale_family,
                      inventory, validate_disconnectivity)
from .history import (HistoryTree, NodeStore, View, build_ground_truth, canonical_form,
                      extract_view, merge_view, simulate)
from .equations import LinearSystem, find_equations, solve_one_parameter
from .leaderless import (UNKNOWN, average_consensus, scale_invariant_eval,
                         stabilizing_concentration, terminating_concentration)
from .leaders import (ApproxResult, approx_count, counting_with_leaders, multi_aggregate_eval,
                      stabilizing_gc, terminating_gc)

__version__ = "0.1.0"
