"""Property harnesses and experiments.

The audits replay mechanisms against exhaustive or sampled deviation
spaces and report every violation found; all runs are reproducible from
(seed, parameters) alone.  Two deliberately broken mechanisms are
included so the harnesses can be shown to have teeth.
"""
from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .mechanisms import sdm, sdmt1, sdmt2, sdmt2_state
from .model import (
    Instance,
    Matching,
    PreferenceList,
    StrictnessError,
    random_instance,
    rank,
    strict_sublist_family,
    triangle_instance,
)
from .oracles import max_weight_matching
from .randomized import F, _tg_reach, g_eval, order_from_draw, rsdm_ties

__all__ = [
    "Mechanism",
    "DeviationSpace",
    "Violation",
    "AuditReport",
    "all_preference_lists",
    "all_strict_lists",
    "full_deviation_space",
    "mechanism_sdm",
    "mechanism_sdmt1",
    "mechanism_sdmt2",
    "broken_max_cardinality",
    "broken_report_order",
    "audit_truthfulness",
    "audit_weight_truthfulness",
    "audit_non_bossiness",
    "audit_equivalence",
    "audit_lemmas",
    "audit_dual_feasibility",
    "experiment_triangle",
    "experiment_family_n3",
    "experiment_two_approx",
    "experiment_order_strategies",
    "random_suite",
    "worker_count",
]

Mechanism = Callable[[Instance], Matching]


def worker_count() -> int:
    """Worker processes for parallel audits, capped by FAIRMATCH_THREADS."""
    cap = os.environ.get("FAIRMATCH_THREADS")
    cpus = os.cpu_count() or 1
    if cap is not None:
        try:
            return max(1, min(int(cap), cpus))
        except ValueError:
            raise ValueError(f"FAIRMATCH_THREADS must be an integer, got {cap!r}")
    return min(2, cpus)


# ---------------------------------------------------------------------------
# Deviation spaces
# ---------------------------------------------------------------------------


def _ordered_partitions(items: tuple[int, ...]) -> Iterable[tuple[tuple[int, ...], ...]]:
    if not items:
        yield ()
        return
    n = len(items)
    for mask in range(1, 1 << n):
        first = tuple(items[k] for k in range(n) if mask >> k & 1)
        rest = tuple(items[k] for k in range(n) if not mask >> k & 1)
        for tail in _ordered_partitions(rest):
            yield (first,) + tail


def all_preference_lists(n2: int) -> tuple[PreferenceList, ...]:
    """Every weak order over every subset of n2 objects.

    26 lists for n2 = 3 (1 empty + 3 singletons + 9 over pairs + 13 over
    triples); grows like the ordered Bell numbers, so keep n2 small.
    """
    if n2 > 4:
        raise ValueError("all_preference_lists is limited to n2 <= 4")
    objects = tuple(range(n2))
    out: list[PreferenceList] = []
    for mask in range(1 << n2):
        subset = tuple(a for a in objects if mask >> a & 1)
        for part in _ordered_partitions(subset):
            out.append(PreferenceList.of(part))
    return tuple(out)


def all_strict_lists(n2: int) -> tuple[PreferenceList, ...]:
    """Every strict order over every subset of n2 objects."""
    if n2 > 4:
        raise ValueError("all_strict_lists is limited to n2 <= 4")
    objects = tuple(range(n2))
    out: list[PreferenceList] = []
    for mask in range(1 << n2):
        subset = tuple(a for a in objects if mask >> a & 1)
        for perm in permutations(subset):
            out.append(PreferenceList.of([[a] for a in perm]))
    return tuple(out)


@dataclass(frozen=True)
class DeviationSpace:
    """Misreports available to one agent: preference lists, and for
    weighted audits the weights he may under-bid to."""

    agent: int
    lists: tuple[PreferenceList, ...]
    weights: tuple[float, ...] = ()


def full_deviation_space(instance: Instance, agent: int) -> DeviationSpace:
    return DeviationSpace(agent=agent, lists=all_preference_lists(instance.n2))


@dataclass(frozen=True)
class Violation:
    instance: str
    agent: int
    misreport: str
    obtained_rank: int
    truthful_rank: int


@dataclass(frozen=True)
class AuditReport:
    mechanism: str
    instances_tested: int
    deviations_tested: int
    violations: tuple[Violation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _with_list(instance: Instance, agent: int, pl: PreferenceList) -> Instance:
    prefs = list(instance.prefs)
    prefs[agent] = pl
    return replace(instance, prefs=tuple(prefs))


def _with_weight(instance: Instance, agent: int, w: float) -> Instance:
    weights = list(instance.weights)
    weights[agent] = w
    return replace(instance, weights=tuple(weights))


def _describe_list(pl: PreferenceList) -> str:
    return " ".join("(" + " ".join(f"a{a+1}" for a in cls) + ")" for cls in pl.classes) or "()"


def _true_rank(instance: Instance, matching: Matching, i: int) -> int:
    a = matching.get(i)
    return instance.n2 + 1 if a is None else rank(instance, i, a)


# ---------------------------------------------------------------------------
# Mechanism handles (including deliberately broken ones)
# ---------------------------------------------------------------------------


def mechanism_sdm(order: Sequence[int]) -> Mechanism:
    order = tuple(order)
    return lambda instance: sdm(instance, order)


def mechanism_sdmt1(order: Sequence[int]) -> Mechanism:
    order = tuple(order)
    return lambda instance: sdmt1(instance, order)


def mechanism_sdmt2(order: Sequence[int]) -> Mechanism:
    order = tuple(order)
    return lambda instance: sdmt2(instance, order)


def broken_max_cardinality() -> Mechanism:
    """Mutation mechanism: re-solves a maximum cardinality matching.

    Not truthful: shrinking a report can force the solver to hand the
    deviator his favorite object.
    """

    def run(instance: Instance) -> Matching:
        unit = replace(instance, weights=(1.0,) * instance.n1)
        return max_weight_matching(unit)[1]

    return run


def broken_report_order() -> Mechanism:
    """Mutation mechanism: serves agents with shorter reported lists first.

    The order depends on report contents, so it is neither truthful nor
    non-bossy.
    """

    def run(instance: Instance) -> Matching:
        order = sorted(range(instance.n1), key=lambda i: (len(instance.prefs[i]), i))
        return sdmt1(instance, order)

    return run


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------


def audit_truthfulness(
    mechanism: Mechanism,
    instances: Sequence[Instance],
    deviation_lists: Sequence[PreferenceList] | None = None,
    mechanism_name: str = "mechanism",
) -> AuditReport:
    """Check that no single-agent list misreport ever improves his rank.

    Ranks are compared in the agent's true list, with n2+1 for being
    unmatched; the mechanism handle must be deterministic.
    """
    deviations = 0
    violations: list[Violation] = []
    for idx, instance in enumerate(instances):
        lists = (
            deviation_lists
            if deviation_lists is not None
            else all_preference_lists(instance.n2)
        )
        truthful = mechanism(instance)
        for i in range(instance.n1):
            r_truth = _true_rank(instance, truthful, i)
            for pl in lists:
                if pl == instance.prefs[i]:
                    continue
                deviations += 1
                outcome = mechanism(_with_list(instance, i, pl))
                r_got = _true_rank(instance, outcome, i)
                if r_got < r_truth:
                    violations.append(
                        Violation(
                            instance=f"#{idx}",
                            agent=i,
                            misreport=_describe_list(pl),
                            obtained_rank=r_got,
                            truthful_rank=r_truth,
                        )
                    )
    return AuditReport(
        mechanism=mechanism_name,
        instances_tested=len(instances),
        deviations_tested=deviations,
        violations=tuple(violations),
    )


def audit_weight_truthfulness(
    instances: Sequence[Instance],
    weight_grid: Sequence[float],
    seed: int,
    draws_per_instance: int = 3,
    deviation_lists: Sequence[PreferenceList] | None = None,
) -> AuditReport:
    """Check the randomized mechanism per realization against under-bids.

    For each fixed draw Y, no combination of a weight w' <= w_i from the
    grid and a list misreport may give agent i a better-ranked object.
    """
    grid = sorted(set(float(w) for w in weight_grid))
    if any(w <= 0 for w in grid):
        raise ValueError("weight grid entries must be positive")
    deviations = 0
    violations: list[Violation] = []
    for idx, instance in enumerate(instances):
        lists = (
            deviation_lists
            if deviation_lists is not None
            else all_preference_lists(instance.n2)
        )
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, idx))))
        for d in range(draws_per_instance):
            y = tuple(float(v) for v in rng.random(instance.n1))

            def run_fixed(inst: Instance) -> Matching:
                return sdmt2(inst, order_from_draw(inst.weights, y))

            truthful = run_fixed(instance)
            for i in range(instance.n1):
                r_truth = _true_rank(instance, truthful, i)
                under_bids = [w for w in grid if w <= instance.weights[i]]
                for w_bid in under_bids:
                    for pl in lists:
                        if w_bid == instance.weights[i] and pl == instance.prefs[i]:
                            continue
                        deviations += 1
                        deviated = _with_weight(
                            _with_list(instance, i, pl), i, w_bid
                        )
                        outcome = run_fixed(deviated)
                        r_got = _true_rank(instance, outcome, i)
                        if r_got < r_truth:
                            violations.append(
                                Violation(
                                    instance=f"#{idx}/draw{d}",
                                    agent=i,
                                    misreport=f"w={w_bid} {_describe_list(pl)}",
                                    obtained_rank=r_got,
                                    truthful_rank=r_truth,
                                )
                            )
    return AuditReport(
        mechanism="rsdm-fixed-draw",
        instances_tested=len(instances),
        deviations_tested=deviations,
        violations=tuple(violations),
    )


def audit_non_bossiness(
    mechanism: Mechanism,
    instances: Sequence[Instance],
    mechanism_name: str = "mechanism",
) -> AuditReport:
    """Flag misreports that keep the deviator's allocation but move others'.

    Defined for strict preference lists only.
    """
    deviations = 0
    violations: list[Violation] = []
    for idx, instance in enumerate(instances):
        if not instance.is_strict:
            raise StrictnessError("non-bossiness audit requires strict lists")
        lists = all_strict_lists(instance.n2)
        truthful = mechanism(instance)
        for i in range(instance.n1):
            own = truthful.get(i)
            for pl in lists:
                if pl == instance.prefs[i]:
                    continue
                deviations += 1
                outcome = mechanism(_with_list(instance, i, pl))
                if outcome.get(i) == own and outcome != truthful:
                    violations.append(
                        Violation(
                            instance=f"#{idx}",
                            agent=i,
                            misreport=_describe_list(pl),
                            obtained_rank=_true_rank(instance, outcome, i),
                            truthful_rank=_true_rank(instance, truthful, i),
                        )
                    )
    return AuditReport(
        mechanism=mechanism_name,
        instances_tested=len(instances),
        deviations_tested=deviations,
        violations=tuple(violations),
    )


def audit_equivalence(
    instances: Sequence[Instance],
    orders: Sequence[Sequence[int]] | None = None,
    seed: int = 0,
    orders_each: int = 3,
) -> AuditReport:
    """Check sdmt1 and sdmt2 match the same agents at the same ranks."""
    checked = 0
    violations: list[Violation] = []
    for idx, instance in enumerate(instances):
        if orders is not None:
            order_list = [tuple(o) for o in orders]
        else:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((seed, idx)))
            )
            order_list = [
                tuple(int(v) for v in rng.permutation(instance.n1))
                for _ in range(orders_each)
            ]
        for order in order_list:
            checked += 1
            m1 = sdmt1(instance, order)
            m2 = sdmt2(instance, order)
            agents1 = {i for i, _ in m1.pairs}
            agents2 = {i for i, _ in m2.pairs}
            if agents1 != agents2:
                diff = agents1 ^ agents2
                violations.append(
                    Violation(
                        instance=f"#{idx}",
                        agent=min(diff),
                        misreport=f"order {order}: matched sets differ",
                        obtained_rank=0,
                        truthful_rank=0,
                    )
                )
                continue
            for i in agents1:
                r1 = rank(instance, i, m1.by_agent[i])
                r2 = rank(instance, i, m2.by_agent[i])
                if r1 != r2:
                    violations.append(
                        Violation(
                            instance=f"#{idx}",
                            agent=i,
                            misreport=f"order {order}: rank differs",
                            obtained_rank=r2,
                            truthful_rank=r1,
                        )
                    )
    return AuditReport(
        mechanism="sdmt1-vs-sdmt2",
        instances_tested=len(instances),
        deviations_tested=checked,
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------------
# Lemma property suite and dual feasibility
# ---------------------------------------------------------------------------


def _thresholds_for_agent(
    instance: Instance, i: int, y_others: dict[int, float]
) -> dict[int, float]:
    """y^c for every acceptable object of agent i under one draw of Y_{-i}.

    Shares the leave-one-out run across objects; equivalent to calling
    threshold_yc per object.
    """
    others = sorted(
        y_others,
        key=lambda l: (-instance.weights[l] * (1.0 - g_eval(y_others[l])), l),
    )
    state = sdmt2_state(instance, others)
    out: dict[int, float] = {}
    for a in instance.prefs[i].objects:
        owner = state.owned.get(a)
        if owner is None or owner in state.labeled:
            out[a] = 1.0
            continue
        k = state.allocated_class[owner]
        B = set(instance.prefs[owner].classes[k - 1]) - {a}
        S = set(y_others) - {owner}
        reached, labeled_hit = _tg_reach(state, owner, B, S)
        if labeled_hit:
            out[a] = 1.0
            continue
        c = min(
            instance.weights[l] * (1.0 - g_eval(y_others[l]))
            for l in reached | {owner}
        )
        ratio = 1.0 - c / instance.weights[i]
        out[a] = 0.0 if ratio < 1.0 / math.e else min(1.0, 1.0 + math.log(ratio))
    return out


@dataclass(frozen=True)
class LemmaReport:
    instances_tested: int
    dominance_checks: int
    dominance_violations: int
    monotonicity_checks: int
    monotonicity_violations: int

    @property
    def passed(self) -> bool:
        return self.dominance_violations == 0 and self.monotonicity_violations == 0


def audit_lemmas(
    instances: Sequence[Instance],
    draws_per_agent: int = 20,
    grid_points: int = 21,
    seed: int = 0,
    beta_slack: float = 1e-9,
) -> LemmaReport:
    """Empirical dominance and monotonicity checks.

    For each agent and each draw of the other agents' values, computes
    the per-object thresholds, then sweeps the agent's own value over a
    grid: below the threshold he must be matched, and the object's dual
    value must never drop below its value at the threshold.
    """
    grid = [k / (grid_points - 1) for k in range(grid_points)]
    dom_checks = dom_viol = mono_checks = mono_viol = 0
    for idx, instance in enumerate(instances):
        weights = instance.weights
        for i in range(instance.n1):
            acceptable = instance.prefs[i].objects
            if not acceptable:
                continue
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((seed, idx, i)))
            )
            for _ in range(draws_per_agent):
                y_full = rng.random(instance.n1)
                y_others = {
                    l: float(y_full[l]) for l in range(instance.n1) if l != i
                }
                thresholds = _thresholds_for_agent(instance, i, y_others)
                for v in grid:
                    y_vec = list(y_full)
                    y_vec[i] = v
                    order = order_from_draw(weights, y_vec)
                    matching = sdmt2(instance, order)
                    matched = matching.get(i) is not None
                    holder_of = matching.by_object
                    for a in acceptable:
                        yc = thresholds[a]
                        if v < yc:
                            dom_checks += 1
                            if not matched:
                                dom_viol += 1
                        mono_checks += 1
                        holder = holder_of.get(a)
                        beta = (
                            0.0
                            if holder is None
                            else weights[holder]
                            * (1.0 - g_eval(y_vec[holder]))
                            / F
                        )
                        beta_c = weights[i] * (1.0 - g_eval(yc)) / F
                        if beta < beta_c - beta_slack:
                            mono_viol += 1
    return LemmaReport(
        instances_tested=len(instances),
        dominance_checks=dom_checks,
        dominance_violations=dom_viol,
        monotonicity_checks=mono_checks,
        monotonicity_violations=mono_viol,
    )


@dataclass(frozen=True)
class DualFeasibilityReport:
    instances_tested: int
    trials: int
    pairs_checked: int
    failures: int
    min_margin: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _dual_feasibility_one(
    args: tuple[Instance, int, int, int],
) -> tuple[int, int, float]:
    """Per-instance Monte Carlo check; returns (pairs, failures, min margin)."""
    instance, idx, trials, seed = args
    n1, n2 = instance.n1, instance.n2
    weights = instance.weights
    sum_a = np.zeros(n1)
    sum_b = np.zeros(n2)
    sum_a2 = np.zeros(n1)
    sum_b2 = np.zeros(n2)
    sum_ab = np.zeros((n1, n2))
    for t in range(trials):
        matching, draw, _ = rsdm_ties(instance, (seed, idx, t))
        alpha = np.zeros(n1)
        beta = np.zeros(n2)
        for i, a in matching.pairs:
            g = math.exp(draw.y[i] - 1.0)
            alpha[i] = weights[i] * g / F
            beta[a] = weights[i] * (1.0 - g) / F
        sum_a += alpha
        sum_b += beta
        sum_a2 += alpha * alpha
        sum_b2 += beta * beta
        sum_ab += np.outer(alpha, beta)
    pairs = failures = 0
    min_margin = math.inf
    for i, a in instance.acceptable_pairs:
        pairs += 1
        mean = (sum_a[i] + sum_b[a]) / trials
        sum_sq = sum_a2[i] + 2.0 * sum_ab[i, a] + sum_b2[a]
        var = max(0.0, (sum_sq - trials * mean * mean) / (trials - 1))
        se = math.sqrt(var / trials)
        margin = mean - (weights[i] - 3.0 * se)
        min_margin = min(min_margin, margin)
        if margin < 0:
            failures += 1
    return pairs, failures, min_margin


def audit_dual_feasibility(
    instances: Sequence[Instance],
    trials: int = 10_000,
    seed: int = 0,
    workers: int | None = None,
) -> DualFeasibilityReport:
    """Monte Carlo check that E[alpha_i + beta_a] >= w_i for every
    acceptable pair, with a 3-standard-error allowance.

    Instances are processed independently (possibly in parallel); the
    per-instance streams are seeded by (seed, instance index, trial), so
    the report does not depend on scheduling.
    """
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    jobs = [(inst, idx, trials, seed) for idx, inst in enumerate(instances)]
    n_workers = worker_count() if workers is None else max(1, workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_dual_feasibility_one, jobs, chunksize=8))
    else:
        results = [_dual_feasibility_one(job) for job in jobs]
    pairs = sum(r[0] for r in results)
    failures = sum(r[1] for r in results)
    min_margin = min((r[2] for r in results), default=math.inf)
    return DualFeasibilityReport(
        instances_tested=len(instances),
        trials=trials,
        pairs_checked=pairs,
        failures=failures,
        min_margin=min_margin,
    )


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleReport:
    n: int
    trials: int
    mean_size: float
    std_error: float
    frac_of_opt: float
    ratio_to_opt: float


def experiment_triangle(n: int, trials: int, seed: int = 0) -> TriangleReport:
    """Monte Carlo matched count of the randomized mechanism on the
    triangle instance, against the perfect matching of size n."""
    if n < 1:
        raise ValueError("n must be positive")
    if trials < 1:
        raise ValueError("trials must be positive")
    instance = triangle_instance(n)
    sizes = np.empty(trials, dtype=float)
    for t in range(trials):
        matching, _, _ = rsdm_ties(instance, (seed, t))
        sizes[t] = matching.size
    mean = float(sizes.mean())
    se = float(sizes.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return TriangleReport(
        n=n,
        trials=trials,
        mean_size=mean,
        std_error=se,
        frac_of_opt=mean / n,
        ratio_to_opt=n / mean if mean > 0 else math.inf,
    )


@dataclass(frozen=True)
class FamilyReport:
    sizes: tuple[int, ...]
    total: int
    opt_sizes: tuple[int, ...]
    opt_total: int


def experiment_family_n3() -> FamilyReport:
    """Serial dictatorship with the identity order over the six-instance
    family of prefix lists on three agents; totals 13 against optimum 18."""
    sizes = []
    opt_sizes = []
    for instance in strict_sublist_family():
        sizes.append(sdm(instance, (0, 1, 2)).size)
        opt_sizes.append(int(max_weight_matching(instance)[0]))
    return FamilyReport(
        sizes=tuple(sizes),
        total=sum(sizes),
        opt_sizes=tuple(opt_sizes),
        opt_total=sum(opt_sizes),
    )


@dataclass(frozen=True)
class TwoApproxReport:
    instances_tested: int
    worst_ratio: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def experiment_two_approx(instances: Sequence[Instance]) -> TwoApproxReport:
    """Weight of sdmt1 under the non-increasing-weight order against the
    maximum weight matching; the ratio must never drop below one half."""
    worst = math.inf
    violations = 0
    for instance in instances:
        order = sorted(range(instance.n1), key=lambda i: (-instance.weights[i], i))
        achieved = sdmt1(instance, order).weight(instance)
        opt, _ = max_weight_matching(instance)
        if opt == 0:
            continue
        ratio = achieved / opt
        worst = min(worst, ratio)
        if 2 * achieved < opt:
            violations += 1
    return TwoApproxReport(
        instances_tested=len(instances),
        worst_ratio=worst,
        violations=violations,
    )


@dataclass(frozen=True)
class StrategyReport:
    n: int
    trials: int
    fractions: dict[str, float]
    std_errors: dict[str, float]

    def best(self) -> str:
        return max(self.fractions, key=lambda s: self.fractions[s])


def _simulate_prefix_sdm(lengths: Sequence[int], order: Sequence[int]) -> int:
    """Greedy dictatorship where agent k accepts objects 0..lengths[k]-1,
    preferring smaller indices.  Returns the matched count."""
    heap = list(range(len(lengths)))
    heapq.heapify(heap)
    matched = 0
    for i in order:
        if heap and heap[0] < lengths[i]:
            heapq.heappop(heap)
            matched += 1
    return matched


def experiment_order_strategies(
    n: int,
    trials: int,
    strategies: Sequence[str] = ("uniform", "fixed", "weight-biased"),
    seed: int = 0,
) -> StrategyReport:
    """Expected matched fraction per order strategy on the random family
    that permutes the triangle's prefix lists among agents uniformly.

    Every member admits a perfect matching, so the fraction is size/n.
    """
    known = {"uniform", "fixed", "weight-biased"}
    for s in strategies:
        if s not in known:
            raise ValueError(f"unknown strategy {s!r}")
    fractions: dict[str, float] = {}
    std_errors: dict[str, float] = {}
    lengths_base = np.arange(1, n + 1)
    for s in strategies:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, s))))
        sizes = np.empty(trials, dtype=float)
        for t in range(trials):
            lengths = rng.permutation(lengths_base)
            if s == "uniform":
                order = rng.permutation(n)
            else:
                # fixed and weight-biased coincide for unit weights
                order = range(n)
            sizes[t] = _simulate_prefix_sdm(lengths, order)
        fractions[s] = float(sizes.mean()) / n
        std_errors[s] = (
            float(sizes.std(ddof=1) / math.sqrt(trials)) / n if trials > 1 else 0.0
        )
    return StrategyReport(n=n, trials=trials, fractions=fractions, std_errors=std_errors)


# ---------------------------------------------------------------------------
# Reproducible random suites
# ---------------------------------------------------------------------------


def random_suite(
    count: int,
    n1_max: int = 6,
    n2_max: int = 6,
    tie_choices: Sequence[float] = (0.0, 0.3, 0.7, 1.0),
    list_density: float = 0.7,
    weight_values: Sequence[float] | None = None,
    seed: int = 0,
    n1_min: int = 1,
    n2_min: int = 1,
) -> list[Instance]:
    """Deterministic list of random instances for audits and experiments."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    out: list[Instance] = []
    for k in range(count):
        n1 = int(rng.integers(n1_min, n1_max + 1))
        n2 = int(rng.integers(n2_min, n2_max + 1))
        tie = float(tie_choices[int(rng.integers(0, len(tie_choices)))])
        inst = random_instance(n1, n2, tie, list_density, seed=(seed, k))
        if weight_values is not None:
            weights = tuple(
                float(weight_values[int(rng.integers(0, len(weight_values)))])
                for _ in range(n1)
            )
            inst = replace(inst, weights=weights)
        out.append(inst)
    return out
