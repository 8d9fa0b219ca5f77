"""Ground-truth verification for matchings.

Pareto optimality is checked through the three-coalition
characterization: a matching is Pareto optimal iff it admits no
augmenting path coalition, no alternating path coalition, and no cyclic
coalition.  Brute-force references (direct dominance over all matchings)
back every structural check at small scale.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .mechanisms import sdmt1
from .model import (
    Instance,
    Matching,
    SizeGuardError,
    all_matchings,
    check_order,
    rank,
    signature_of,
)

__all__ = [
    "Coalition",
    "EnvyGraph",
    "verify_coalition",
    "is_pareto_optimal",
    "find_coalition",
    "brute_force_pareto_set",
    "max_weight_matching",
    "signature_of",
    "is_strong_priority",
    "enumerate_spm",
    "enumerate_pareto",
    "build_envy_graph",
    "order_for_matching",
]


@dataclass(frozen=True)
class Coalition:
    """A witness that a matching is not Pareto optimal.

    ``agents`` lists the coalition members in order; the two path kinds
    end at ``terminal_object`` (an unmatched object), cyclic coalitions
    have none.
    """

    kind: str  # "augmenting-path" | "alternating-path" | "cyclic"
    agents: tuple[int, ...]
    terminal_object: int | None = None


def _own_rank(instance: Instance, matching: Matching, i: int) -> int:
    a = matching.by_agent.get(i)
    return instance.n2 + 1 if a is None else rank(instance, i, a)


def verify_coalition(
    instance: Instance, matching: Matching, coalition: Coalition
) -> bool:
    """Check a claimed coalition against its definition."""
    ag = coalition.agents
    b = coalition.terminal_object
    by_agent = matching.by_agent
    if len(set(ag)) != len(ag) or not ag:
        return False
    own = [_own_rank(instance, matching, i) for i in ag]

    if coalition.kind == "cyclic":
        if b is not None or len(ag) < 2:
            return False
        if any(i not in by_agent for i in ag):
            return False
        strict = False
        for t, i in enumerate(ag):
            nxt = by_agent[ag[(t + 1) % len(ag)]]
            r = rank(instance, i, nxt)
            if r > own[t]:
                return False
            strict = strict or r < own[t]
        return strict

    if b is None or b in matching.by_object:
        return False
    if coalition.kind == "augmenting-path":
        if ag[0] in by_agent or any(i not in by_agent for i in ag[1:]):
            return False
        if len(ag) == 1:
            return rank(instance, ag[0], b) <= instance.n2
        if rank(instance, ag[0], by_agent[ag[1]]) > instance.n2:
            return False
    elif coalition.kind == "alternating-path":
        if any(i not in by_agent for i in ag):
            return False
        if len(ag) == 1:
            return rank(instance, ag[0], b) < own[0]
        if rank(instance, ag[0], by_agent[ag[1]]) >= own[0]:
            return False
    else:
        return False
    for t in range(1, len(ag) - 1):
        if rank(instance, ag[t], by_agent[ag[t + 1]]) > own[t]:
            return False
    return rank(instance, ag[-1], b) <= own[-1]


def _weak_adjacency(
    instance: Instance, matching: Matching, matched: Sequence[int]
) -> dict[int, list[int]]:
    """j -> agents k (matched) whose object j weakly prefers to his own."""
    adj: dict[int, list[int]] = {}
    by_agent = matching.by_agent
    for j in matched:
        r_own = rank(instance, j, by_agent[j])
        adj[j] = [
            k for k in matched if k != j and rank(instance, j, by_agent[k]) <= r_own
        ]
    return adj


def _terminal_objects(
    instance: Instance, matching: Matching, matched: Sequence[int]
) -> dict[int, int]:
    """Matched agent -> smallest unmatched object he weakly likes."""
    unmatched_objs = [
        b for b in range(instance.n2) if b not in matching.by_object
    ]
    out: dict[int, int] = {}
    by_agent = matching.by_agent
    for j in matched:
        r_own = rank(instance, j, by_agent[j])
        for b in unmatched_objs:
            if rank(instance, j, b) <= r_own:
                out[j] = b
                break
    return out


def _weak_bfs(
    adj: dict[int, list[int]],
    sources: Iterable[int],
    goals: dict[int, int],
    banned: int | None = None,
) -> tuple[list[int], int] | None:
    parent: dict[int, int | None] = {}
    queue: deque[int] = deque()
    for s in sources:
        if s == banned or s in parent:
            continue
        parent[s] = None
        queue.append(s)
    while queue:
        u = queue.popleft()
        if u in goals:
            path = [u]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return path, goals[u]
        for v in adj.get(u, ()):
            if v != banned and v not in parent:
                parent[v] = u
                queue.append(v)
    return None


def find_coalition(instance: Instance, matching: Matching) -> Coalition | None:
    """Search for any coalition: augmenting first, then alternating, cyclic."""
    matching.validate(instance)
    by_agent = matching.by_agent
    matched = sorted(by_agent)
    unmatched_objs = [b for b in range(instance.n2) if b not in matching.by_object]
    adj = _weak_adjacency(instance, matching, matched)
    goals = _terminal_objects(instance, matching, matched)

    # Augmenting path coalitions: from an unmatched agent.
    starts: dict[int, int] = {}
    for i0 in range(instance.n1):
        if i0 in by_agent:
            continue
        for a in instance.prefs[i0].objects:
            holder = matching.by_object.get(a)
            if holder is None:
                return Coalition("augmenting-path", (i0,), a)
            starts.setdefault(holder, i0)
    for i1, i0 in sorted(starts.items()):
        hit = _weak_bfs(adj, [i1], goals)
        if hit is not None:
            path, b = hit
            return Coalition("augmenting-path", (i0, *path), b)

    # Alternating path coalitions: first edge strict.
    for i0 in matched:
        r_own = rank(instance, i0, by_agent[i0])
        for b in unmatched_objs:
            if rank(instance, i0, b) < r_own:
                return Coalition("alternating-path", (i0,), b)
        strict_next = [
            k for k in matched if k != i0 and rank(instance, i0, by_agent[k]) < r_own
        ]
        hit = _weak_bfs(adj, strict_next, goals, banned=i0)
        if hit is not None:
            path, b = hit
            return Coalition("alternating-path", (i0, *path), b)

    # Cyclic coalitions: a weak-preference cycle with a strict edge, i.e.
    # a strict edge inside a strongly connected component.
    scc_of = _scc(matched, adj)
    for j in matched:
        r_own = rank(instance, j, by_agent[j])
        for k in adj[j]:
            if scc_of[j] == scc_of[k] and rank(instance, j, by_agent[k]) < r_own:
                restricted = {
                    u: [v for v in adj[u] if scc_of[v] == scc_of[j]]
                    for u in matched
                    if scc_of[u] == scc_of[j]
                }
                back = _weak_bfs(restricted, [k], {j: -1})
                assert back is not None
                path, _ = back
                cycle = (j, *path[:-1]) if path[-1] == j else (j, *path)
                return Coalition("cyclic", cycle)
    return None


def is_pareto_optimal(
    instance: Instance, matching: Matching
) -> tuple[bool, Coalition | None]:
    """True iff no coalition exists; otherwise returns a verified witness."""
    witness = find_coalition(instance, matching)
    if witness is None:
        return True, None
    if not verify_coalition(instance, matching, witness):
        raise AssertionError(f"internal error: invalid witness {witness}")
    return False, witness


# ---------------------------------------------------------------------------
# Brute-force references
# ---------------------------------------------------------------------------


def _rank_vector(instance: Instance, matching: Matching) -> tuple[int, ...]:
    return signature_of(instance, matching, range(instance.n1))


def _dominates(u: tuple[int, ...], v: tuple[int, ...]) -> bool:
    return u != v and all(x <= y for x, y in zip(u, v))


def brute_force_pareto_set(instance: Instance) -> set[Matching]:
    """All Pareto optimal matchings by direct dominance over all matchings."""
    if instance.n1 > 6 or instance.n2 > 6:
        raise SizeGuardError("brute_force_pareto_set is limited to n1, n2 <= 6")
    by_vector: dict[tuple[int, ...], list[Matching]] = {}
    for mu in all_matchings(instance):
        by_vector.setdefault(_rank_vector(instance, mu), []).append(mu)
    front: list[tuple[int, ...]] = []
    for v in by_vector:
        if any(_dominates(f, v) for f in front):
            continue
        front = [f for f in front if not _dominates(v, f)]
        front.append(v)
    return {mu for v in front for mu in by_vector[v]}


def _kuhn_augment(
    adj: dict[int, Sequence[int]], by_object: dict[int, int], i: int
) -> dict[int, int] | None:
    """Alternating-path search; returns updated object->agent map or None."""
    parent: dict[int, int] = {}
    queue = deque([i])
    seen = {i}
    while queue:
        u = queue.popleft()
        for b in adj.get(u, ()):
            if b in parent:
                continue
            parent[b] = u
            holder = by_object.get(b)
            if holder is None:
                out = dict(by_object)
                obj = b
                while True:
                    agent = parent[obj]
                    prev = out.get(obj)
                    out[obj] = agent
                    if agent == i:
                        return out
                    # agent previously held some object; find it
                    held = next(o for o, ag in by_object.items() if ag == agent)
                    obj = held
            if holder not in seen:
                seen.add(holder)
                queue.append(holder)
    return None


def _saturable(adj: dict[int, Sequence[int]], agents: Sequence[int]) -> bool:
    by_object: dict[int, int] = {}
    for i in agents:
        nxt = _kuhn_augment(adj, by_object, i)
        if nxt is None:
            return False
        by_object = nxt
    return True


def max_weight_matching(instance: Instance) -> tuple[float, Matching]:
    """Maximum total agent-weight matching over acceptable pairs.

    Greedy over agents in non-increasing weight (ties by index) with
    augmenting-path feasibility keeps exactly the maximum-weight
    saturable agent set; the pair set is then the lexicographically
    smallest assignment for that set.  Exact when weights are integers.
    """
    adj = {i: instance.prefs[i].objects for i in range(instance.n1)}
    ordered = sorted(range(instance.n1), key=lambda i: (-instance.weights[i], i))
    by_object: dict[int, int] = {}
    saturated: list[int] = []
    for i in ordered:
        nxt = _kuhn_augment(adj, by_object, i)
        if nxt is not None:
            by_object = nxt
            saturated.append(i)
    saturated.sort()

    fixed: dict[int, int] = {}
    used: set[int] = set()
    for pos, i in enumerate(saturated):
        rest = saturated[pos + 1 :]
        for a in sorted(adj[i]):
            if a in used:
                continue
            rest_adj = {
                j: [b for b in adj[j] if b != a and b not in used] for j in rest
            }
            if _saturable(rest_adj, rest):
                fixed[i] = a
                used.add(a)
                break
        else:
            raise AssertionError("saturated set lost feasibility")
    weight = sum(instance.weights[i] for i in saturated)
    return weight, Matching.of(fixed)


# ---------------------------------------------------------------------------
# Strong priority matchings
# ---------------------------------------------------------------------------


def is_strong_priority(
    instance: Instance, matching: Matching, order: Sequence[int]
) -> bool:
    """True iff the signature equals that of sdmt1 under the same order."""
    order = check_order(instance, order)
    matching.validate(instance)
    reference = sdmt1(instance, order)
    return signature_of(instance, matching, order) == signature_of(
        instance, reference, order
    )


def enumerate_spm(instance: Instance, order: Sequence[int]) -> set[Matching]:
    """All strong priority matchings w.r.t. order.

    These are exactly the maximum-cardinality matchings of the graph that
    joins each sdmt1-matched agent to the objects he ranks the same as
    his sdmt1 object.
    """
    if instance.n1 > 6 or instance.n2 > 6:
        raise SizeGuardError("enumerate_spm is limited to n1, n2 <= 6")
    order = check_order(instance, order)
    mu_star = sdmt1(instance, order)
    agents = [i for i, _ in mu_star.pairs]
    target_rank = {i: rank(instance, i, mu_star.by_agent[i]) for i in agents}
    adj = {
        i: [a for a in instance.prefs[i].objects
            if rank(instance, i, a) == target_rank[i]]
        for i in agents
    }

    out: set[Matching] = set()
    assigned: dict[int, int] = {}
    used: set[int] = set()

    def rec(pos: int) -> None:
        if pos == len(agents):
            out.add(Matching.of(assigned))
            return
        i = agents[pos]
        for a in adj[i]:
            if a in used:
                continue
            assigned[i] = a
            used.add(a)
            rest = agents[pos + 1 :]
            rest_adj = {j: [b for b in adj[j] if b not in used] for j in rest}
            if _saturable(rest_adj, rest):
                rec(pos + 1)
            used.discard(a)
            del assigned[i]

    rec(0)
    return out


def enumerate_pareto(instance: Instance) -> set[Matching]:
    """All Pareto optimal matchings as the union of SPM sets over orders."""
    if instance.n1 > 5 or instance.n2 > 5:
        raise SizeGuardError("enumerate_pareto is limited to n1, n2 <= 5")
    out: set[Matching] = set()
    for perm in itertools.permutations(range(instance.n1)):
        out |= enumerate_spm(instance, perm)
    return out


# ---------------------------------------------------------------------------
# Constructive ordering: envy graph, SCC condensation, reversed toposort
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvyGraph:
    """Directed envy structure of a matching.

    Edge i -> k when i weakly prefers k's assignment to his own (with
    rank n2+1 for being unmatched); green when indifferent, red when the
    preference is strict.
    """

    n1: int
    green: frozenset[tuple[int, int]]
    red: frozenset[tuple[int, int]]

    def successors(self, i: int) -> list[int]:
        return sorted(
            [k for j, k in self.green if j == i] + [k for j, k in self.red if j == i]
        )


def build_envy_graph(instance: Instance, matching: Matching) -> EnvyGraph:
    matching.validate(instance)
    green: set[tuple[int, int]] = set()
    red: set[tuple[int, int]] = set()
    unmatched_rank = instance.n2 + 1
    by_agent = matching.by_agent
    for i in range(instance.n1):
        r_own = _own_rank(instance, matching, i)
        for k in range(instance.n1):
            if k == i:
                continue
            a = by_agent.get(k)
            r = unmatched_rank if a is None else rank(instance, i, a)
            if r < r_own:
                red.add((i, k))
            elif r == r_own:
                green.add((i, k))
    return EnvyGraph(instance.n1, frozenset(green), frozenset(red))


def _scc(nodes: Sequence[int], adj: dict[int, list[int]]) -> dict[int, int]:
    """Strongly connected components (iterative Tarjan); node -> component id."""
    index_of: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comp: dict[int, int] = {}
    counter = itertools.count()
    comp_counter = itertools.count()

    for root in nodes:
        if root in index_of:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index_of[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index_of:
                    index_of[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index_of[v]:
                cid = next(comp_counter)
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = cid
                    if w == v:
                        break
    return comp


def order_for_matching(instance: Instance, matching: Matching) -> tuple[int, ...]:
    """An agent order under which the given Pareto optimal matching is a
    strong priority matching.

    Condenses the envy graph into strongly connected components
    (necessarily all-green inside), topologically sorts the condensation
    and returns a reversed topological order, ties broken by ascending
    agent index.  Raises ValueError when the input is not Pareto optimal.
    """
    ok, witness = is_pareto_optimal(instance, matching)
    if not ok:
        raise ValueError(f"matching is not Pareto optimal: {witness}")
    envy = build_envy_graph(instance, matching)
    nodes = list(range(instance.n1))
    adj = {i: envy.successors(i) for i in nodes}
    comp = _scc(nodes, adj)
    for i, k in envy.red:
        if comp[i] == comp[k]:
            raise ValueError("red edge inside a strongly connected component")

    members: dict[int, list[int]] = {}
    for i in nodes:
        members.setdefault(comp[i], []).append(i)
    comp_adj: dict[int, set[int]] = {c: set() for c in members}
    indegree = {c: 0 for c in members}
    for i in nodes:
        for k in adj[i]:
            if comp[i] != comp[k] and comp[k] not in comp_adj[comp[i]]:
                comp_adj[comp[i]].add(comp[k])
                indegree[comp[k]] += 1

    ready = sorted((c for c in members if indegree[c] == 0),
                   key=lambda c: min(members[c]))
    topo: list[int] = []
    while ready:
        c = ready.pop(0)
        topo.append(c)
        changed = False
        for d in comp_adj[c]:
            indegree[d] -= 1
            if indegree[d] == 0:
                ready.append(d)
                changed = True
        if changed:
            ready.sort(key=lambda c: min(members[c]))
    order = [i for c in reversed(topo) for i in sorted(members[c])]
    return tuple(order)
