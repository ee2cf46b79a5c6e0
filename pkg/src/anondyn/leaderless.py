"""Concentration ``(1/n) * inventory`` without leaders, and what follows from it."""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from typing import Callable

from .equations import find_equations, solve_one_parameter
from .history import View


class _Unknown:
    """Output of a process that cannot commit to an answer yet."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unknown"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Unknown, ())


UNKNOWN = _Unknown()


def label_weights(view: View):
    """Relative sizes ``{label: beta}`` of the level-0 classes, or None.

    Solves the system found in the view for the anonymity ratios of its
    level ``t`` and adds them up per label (a level-``t`` node descends from
    the level-0 node with the same label).
    """
    t, system = find_equations(view)
    if t < 0:
        return None
    alpha = solve_one_parameter(system)
    if alpha is None:
        return None
    beta = {view.label(v): Fraction(0) for v in view.level(0)}
    for a, w in zip(alpha, view.level(t)):
        beta[view.label(w)] += a
    return beta


def stabilizing_concentration(view: View):
    """``{input: fraction of processes}`` as a process sees it, or UNKNOWN."""
    beta = label_weights(view)
    if beta is None:
        return UNKNOWN
    total = sum(beta.values())
    return {z: b / total for z, b in beta.items()}


def terminating_concentration(view: View, T: int, N: int, current_round: int | None = None):
    """Concentration with a termination flag, given ``T`` and a bound ``N >= n``.

    Terminates once the current round is at least ``t + T*N``, where ``t`` is
    the level of the equations found in the view.
    """
    r = view.depth if current_round is None else current_round
    t, system = find_equations(view)
    if t < 0:
        return UNKNOWN, False
    out = stabilizing_concentration(view)
    return out, out is not UNKNOWN and r >= t + T * N


def scale_invariant_eval(conc: dict, psi: Callable, own):
    """Evaluate a scale-invariant ``psi(own, multiset)`` from a concentration.

    The multiset is the smallest integer rescaling of the concentration.
    """
    if conc is UNKNOWN:
        raise ValueError("concentration is not known yet")
    return psi(own, smallest_multiset(conc))


def smallest_multiset(conc: dict) -> dict:
    d = math.lcm(*(Fraction(f).denominator for f in conc.values()))
    return {z: int(f * d) for z, f in conc.items()}


def _numeric(z) -> Fraction:
    return Fraction(getattr(z, "value", z))


def mean(own, multiset: dict) -> Fraction:
    total = sum(multiset.values())
    return sum(_numeric(z) * m for z, m in multiset.items()) / total


def maximum(own, multiset: dict) -> Fraction:
    return max(_numeric(z) for z, m in multiset.items() if m)


def mode(own, multiset: dict):
    """Most frequent numeric value; ties go to the smallest value."""
    counts = Counter()
    for z, m in multiset.items():
        counts[_numeric(z)] += m
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def variance(own, multiset: dict) -> Fraction:
    mu = mean(own, multiset)
    total = sum(multiset.values())
    return sum((_numeric(z) - mu) ** 2 * m for z, m in multiset.items()) / total


BUILTIN_SIGNATURES = {"mean": mean, "max": maximum, "mode": mode, "variance": variance}


def average_consensus(view: View):
    """Mean of the numeric inputs, exact, or UNKNOWN."""
    conc = stabilizing_concentration(view)
    if conc is UNKNOWN:
        return UNKNOWN
    return mean(None, conc)
