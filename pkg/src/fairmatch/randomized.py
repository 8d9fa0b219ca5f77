"""Randomized weighted mechanism and its primal-dual accounting.

Each agent draws Y_i uniform on [0,1]; agents are served in decreasing
order of w_i * (1 - g(Y_i)) with g(y) = e^(y-1), and the tie-aware serial
dictatorship runs under that order.  Per run, closed-form duals
alpha_i = w_i g(Y_i)/F and beta_a = w_i (1-g(Y_i))/F (F = 1 - 1/e)
certify the e/(e-1) approximation ratio: the primal value always equals
F times the dual value, and the duals are feasible in expectation.

Randomness comes from numpy's PCG64 seeded through SeedSequence; trial t
of a Monte Carlo estimate uses the stream seeded by (seed, t), so trials
are reproducible independently of execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .mechanisms import (
    TradingState,
    build_trading_graph,
    finalize_state,
    sdmt2_state,
)
from .model import Instance, Matching, rank

__all__ = [
    "F",
    "g_eval",
    "g_integral",
    "RandomDraw",
    "DualCertificate",
    "order_from_draw",
    "rsdm_ties",
    "dual_certificate",
    "threshold_yc",
    "estimate_expected_weight",
]

F = 1.0 - 1.0 / math.e


def g_eval(y: float) -> float:
    """The trade-off function e^(y-1); increasing, range [1/e, 1]."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must be in [0,1], got {y}")
    return math.exp(y - 1.0)


def g_integral(theta: float) -> float:
    """Closed form of the integral of g over [0, theta]."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0,1], got {theta}")
    return math.exp(theta - 1.0) - math.exp(-1.0)


@dataclass(frozen=True)
class RandomDraw:
    """One uniform draw per agent."""

    y: tuple[float, ...]

    def __post_init__(self):
        if any(not 0.0 <= v <= 1.0 for v in self.y):
            raise ValueError("draw entries must lie in [0,1]")


def order_from_draw(
    weights: Sequence[float], y: Sequence[float]
) -> tuple[int, ...]:
    """Agents in decreasing w_i(1-g(Y_i)), ties in favor of smaller index."""
    w = np.asarray(weights, dtype=float)
    yv = np.asarray(y, dtype=float)
    keys = w * (1.0 - np.exp(yv - 1.0))
    return tuple(int(i) for i in np.argsort(-keys, kind="stable"))


def rsdm_ties(
    instance: Instance, seed: int | tuple[int, ...]
) -> tuple[Matching, RandomDraw, tuple[int, ...]]:
    """Randomized weighted serial dictatorship with ties.

    Returns the matching together with the drawn Y vector and the induced
    agent order, so a run can be audited afterwards.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    y = rng.random(instance.n1)
    order = order_from_draw(instance.weights, y)
    matching = finalize_state(sdmt2_state(instance, order))
    return matching, RandomDraw(tuple(float(v) for v in y)), order


@dataclass(frozen=True)
class DualCertificate:
    """Per-run primal/dual assignment.

    ``alpha`` is indexed by agent, ``beta`` by object; both are zero off
    the matching.  The primal value equals F times the dual value by
    construction (up to float rounding).
    """

    x: tuple[tuple[int, int], ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    F: float
    primal_value: float
    dual_value: float


def dual_certificate(
    instance: Instance, matching: Matching, draw: RandomDraw
) -> DualCertificate:
    """Populate x, alpha, beta for one realized run."""
    matching.validate(instance)
    if len(draw.y) != instance.n1:
        raise ValueError("draw length must equal the number of agents")
    alpha = [0.0] * instance.n1
    beta = [0.0] * instance.n2
    primal = 0.0
    for i, a in matching.pairs:
        w = instance.weights[i]
        g = g_eval(draw.y[i])
        alpha[i] = w * g / F
        beta[a] = w * (1.0 - g) / F
        primal += w
    dual = sum(alpha) + sum(beta)
    return DualCertificate(
        x=matching.pairs,
        alpha=tuple(alpha),
        beta=tuple(beta),
        F=F,
        primal_value=primal,
        dual_value=dual,
    )


def _tg_reach(
    state: TradingState, origin: int, B: set[int], S: set[int]
) -> tuple[set[int], bool]:
    """Agents reachable from origin in TG(origin, B, S) and whether any
    labeled agent is among them."""
    graph = build_trading_graph(state, origin, B, S)
    succ: dict[int, list[int]] = {}
    for u, v in graph.arcs:
        succ.setdefault(u, []).append(v)
    reached: set[int] = set()
    stack = [origin]
    labeled_hit = False
    while stack:
        u = stack.pop()
        for v in succ.get(u, ()):
            if v not in reached:
                reached.add(v)
                labeled_hit = labeled_hit or v in state.labeled
                stack.append(v)
    return reached, labeled_hit


def threshold_yc(
    instance: Instance,
    i: int,
    a: int,
    partial_draw: Mapping[int, float],
) -> float:
    """Critical draw value below which agent i is guaranteed a match.

    Runs the mechanism without agent i under the given draws, then
    inspects the pre-finalization ownership around object a:

    1. a owned by nobody                              -> 1
    2. a's owner is labeled                           -> 1
    3. owner's class minus a reaches a labeled agent  -> 1
    4. otherwise solve w_i(1-g(y)) = min reachable w_l(1-g(Y_l))
    5. no solution in [0,1]                           -> 0
    """
    if rank(instance, i, a) > instance.n2:
        raise ValueError(f"pair ({i},{a}) is not acceptable")
    others = set(range(instance.n1)) - {i}
    if set(partial_draw) != others:
        raise ValueError("partial_draw must cover exactly the other agents")
    for v in partial_draw.values():
        if not 0.0 <= v <= 1.0:
            raise ValueError("draw entries must lie in [0,1]")

    others_sorted = sorted(
        others,
        key=lambda l: (-instance.weights[l] * (1.0 - g_eval(partial_draw[l])), l),
    )
    state = sdmt2_state(instance, others_sorted)

    owner = state.owned.get(a)
    if owner is None:
        return 1.0
    if owner in state.labeled:
        return 1.0

    k = state.allocated_class[owner]
    cls = instance.prefs[owner].classes[k - 1]
    B = set(cls) - {a}
    S = others - {owner}
    reached, labeled_hit = _tg_reach(state, owner, B, S)
    if labeled_hit:
        return 1.0

    candidates = reached | {owner}
    c = min(
        instance.weights[l] * (1.0 - g_eval(partial_draw[l])) for l in candidates
    )
    ratio = 1.0 - c / instance.weights[i]
    if ratio < 1.0 / math.e:
        return 0.0
    return min(1.0, 1.0 + math.log(ratio))


def estimate_expected_weight(
    instance: Instance, trials: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo mean matching weight and its standard error.

    Trial t draws from the stream seeded by (seed, t); the mean is
    accumulated in trial order, so the result does not depend on how
    trials are scheduled.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    values = np.empty(trials, dtype=float)
    for t in range(trials):
        matching, _, _ = rsdm_ties(instance, (seed, t))
        values[t] = matching.weight(instance)
    mean = float(values.mean())
    if trials == 1:
        return mean, 0.0
    se = float(values.std(ddof=1) / math.sqrt(trials))
    return mean, se
