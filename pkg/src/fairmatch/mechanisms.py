"""Deterministic allocation mechanisms.

Three mechanisms over a fixed agent order:

* ``sdm``    -- classical serial dictatorship, strict lists only.
* ``sdmt1``  -- serial dictatorship with ties via augmenting paths: each
  agent's indifference classes are tried best-first, and a class commits
  as soon as the bipartite graph of committed ties admits an augmenting
  path from the agent.
* ``sdmt2``  -- equivalent mechanism via trading graphs: agents
  provisionally own whole ties ("labeled" when owning two or more), and
  later agents may pull an owned object toward them along a trading path
  ending at a labeled agent.

Both tie-aware mechanisms produce a strong priority matching w.r.t. the
order (lexicographically minimal signature), hence a Pareto optimal
matching, and they match the same agents at the same ranks.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (
    Instance,
    Matching,
    StrictnessError,
    check_order,
    rank,
)

__all__ = [
    "sdm",
    "sdmt1",
    "sdmt1_phases",
    "find_augmenting_path",
    "TradingState",
    "TradingGraph",
    "build_trading_graph",
    "max_tg",
    "trading",
    "sdmt2",
    "sdmt2_state",
    "finalize_state",
    "sdmt2_trace",
]


# ---------------------------------------------------------------------------
# Serial dictatorship for strict lists
# ---------------------------------------------------------------------------


def _greedy_strict(instance: Instance, order: Sequence[int]) -> dict[int, int]:
    """Each agent takes his most preferred still-free object, if any.

    Correct whenever every indifference class is a singleton (flat
    preference order = preference order).
    """
    available = np.ones(instance.n2, dtype=bool)
    flat = instance.flat_prefs
    out: dict[int, int] = {}
    for i in order:
        prefs = flat[i]
        if prefs.size == 0:
            continue
        mask = available[prefs]
        k = int(mask.argmax())
        if mask[k]:
            a = int(prefs[k])
            out[i] = a
            available[a] = False
    return out


def sdm(instance: Instance, order: Sequence[int]) -> Matching:
    """Classical serial dictatorship; raises StrictnessError on any tie."""
    order = check_order(instance, order)
    if not instance.is_strict:
        raise StrictnessError("sdm requires strict preference lists (no ties)")
    return Matching.of(_greedy_strict(instance, order))


# ---------------------------------------------------------------------------
# SDMT-1: augmenting paths over committed ties
# ---------------------------------------------------------------------------


def _augment_search(
    adj: Mapping[int, Sequence[int]],
    by_agent: Mapping[int, int],
    by_object: Mapping[int, int],
    source: int,
) -> list[int] | None:
    """BFS for an augmenting path from unmatched agent ``source``.

    Objects are explored in ascending index, so the returned shortest
    path is deterministic.  Returns [agent, object, agent, object, ...]
    ending at an unmatched object, or None.
    """
    parent_obj: dict[int, int] = {}  # object -> agent we reached it from
    queue: deque[int] = deque([source])
    seen_agents = {source}
    while queue:
        u = queue.popleft()
        for b in adj.get(u, ()):
            if b in parent_obj:
                continue
            parent_obj[b] = u
            holder = by_object.get(b)
            if holder is None:
                path = [b]
                agent = u
                while True:
                    path.append(agent)
                    if agent == source:
                        break
                    path.append(by_agent[agent])
                    agent = parent_obj[by_agent[agent]]
                path.reverse()
                return path
            if holder not in seen_agents:
                seen_agents.add(holder)
                queue.append(holder)
    return None


def find_augmenting_path(
    graph_edges: Mapping[int, Iterable[int]] | Iterable[tuple[int, int]],
    matching: Matching | Mapping[int, int],
    source: int,
) -> list[int] | None:
    """Find an augmenting path from ``source`` in a bipartite graph.

    ``graph_edges`` is either an adjacency mapping agent -> objects or an
    iterable of (agent, object) pairs.  The path alternates non-matching
    and matching edges and ends at an unmatched object.
    """
    if isinstance(graph_edges, Mapping):
        adj = {u: sorted(vs) for u, vs in graph_edges.items()}
    else:
        adj = {}
        for u, v in graph_edges:
            adj.setdefault(u, []).append(v)
        adj = {u: sorted(vs) for u, vs in adj.items()}
    by_agent = dict(matching.by_agent if isinstance(matching, Matching) else matching)
    by_object = {a: i for i, a in by_agent.items()}
    if source in by_agent:
        raise ValueError(f"source agent {source} is already matched")
    return _augment_search(adj, by_agent, by_object, source)


def _sdmt1_run(
    instance: Instance, order: Sequence[int], record: list | None = None
) -> dict[int, int]:
    adj: dict[int, tuple[int, ...]] = {}
    by_agent: dict[int, int] = {}
    by_object: dict[int, int] = {}
    for i in order:
        matched_class = None
        for cls in instance.prefs[i].classes:
            adj[i] = cls
            path = _augment_search(adj, by_agent, by_object, i)
            if path is None:
                del adj[i]
                continue
            new_pairs = [(path[k], path[k + 1]) for k in range(0, len(path) - 1, 2)]
            for agent, obj in new_pairs:
                old = by_agent.get(agent)
                if old is not None and by_object.get(old) == agent:
                    del by_object[old]
            for agent, obj in new_pairs:
                by_agent[agent] = obj
                by_object[obj] = agent
            matched_class = cls
            break
        if record is not None:
            record.append((i, matched_class, dict(by_agent)))
    return by_agent


def sdmt1(instance: Instance, order: Sequence[int]) -> Matching:
    """Serial dictatorship with ties, augmenting-path version.

    Per phase, the current agent's classes are examined best-first and
    edges to a whole class are committed as soon as an augmenting path
    from the agent exists; earlier agents are only ever shuffled within
    their committed class.
    """
    order = check_order(instance, order)
    return Matching.of(_sdmt1_run(instance, order))


def sdmt1_phases(
    instance: Instance, order: Sequence[int]
) -> tuple[Matching, list[tuple[int, tuple[int, ...] | None, dict[int, int]]]]:
    """Run sdmt1 recording, per phase, (agent, committed class, matching)."""
    order = check_order(instance, order)
    record: list = []
    by_agent = _sdmt1_run(instance, order, record)
    return Matching.of(by_agent), record


# ---------------------------------------------------------------------------
# Trading-graph substrate for SDMT-2
# ---------------------------------------------------------------------------


@dataclass
class TradingState:
    """Provisional ownership during an SDMT-2 run.

    Agents own whole sets of equally-ranked objects; an agent owning two
    or more is *labeled*.  ``available`` holds the never-yet-owned
    objects; ``allocated_class`` maps each owner to the 1-based rank of
    the class his owned objects live in.
    """

    instance: Instance
    owned: dict[int, int] = field(default_factory=dict)  # object -> agent
    owned_by: dict[int, set[int]] = field(default_factory=dict)
    labeled: set[int] = field(default_factory=set)
    available: set[int] = field(default_factory=set)
    allocated_class: dict[int, int] = field(default_factory=dict)

    @staticmethod
    def initial(instance: Instance) -> "TradingState":
        return TradingState(instance=instance, available=set(range(instance.n2)))

    def copy(self) -> "TradingState":
        return TradingState(
            instance=self.instance,
            owned=dict(self.owned),
            owned_by={i: set(s) for i, s in self.owned_by.items()},
            labeled=set(self.labeled),
            available=set(self.available),
            allocated_class=dict(self.allocated_class),
        )

    def pointing_set(self, j: int) -> set[int]:
        """Objects an unlabeled owner j would accept in place of his own."""
        k = self.allocated_class[j]
        cls = self.instance.prefs[j].classes[k - 1]
        return set(cls) - self.owned_by[j]

    def check_invariants(self) -> None:
        for i, objs in self.owned_by.items():
            if not objs:
                raise AssertionError(f"agent {i} has an empty ownership set")
            k = self.allocated_class.get(i)
            if k is None:
                raise AssertionError(f"owner {i} has no allocated class")
            for a in objs:
                if rank(self.instance, i, a) != k:
                    raise AssertionError(
                        f"agent {i} owns {a} outside his committed class {k}"
                    )
            if (len(objs) >= 2) != (i in self.labeled):
                raise AssertionError(f"agent {i} mislabeled")
        for a, i in self.owned.items():
            if a not in self.owned_by.get(i, ()):
                raise AssertionError("owned/owned_by out of sync")
            if a in self.available:
                raise AssertionError(f"object {a} both owned and available")


@dataclass(frozen=True)
class TradingGraph:
    """Directed pointing structure TG(origin, targets, S).

    The origin points to owners of ``targets``; each pointed-to unlabeled
    owner points to owners of the rest of his committed class, and so on.
    Labeled agents are sinks.
    """

    origin: int
    targets: frozenset[int]
    nodes: frozenset[int]
    arcs: frozenset[tuple[int, int]]

    def successors(self, u: int) -> tuple[int, ...]:
        return tuple(sorted(v for s, v in self.arcs if s == u))


def _check_tg_preconditions(
    state: TradingState, i: int, B: Iterable[int], S: Iterable[int]
) -> tuple[set[int], set[int]]:
    B = set(B)
    S = set(S)
    if i in S:
        raise ValueError("origin agent may not be a member of S")
    acceptable = set(state.instance.prefs[i].objects)
    if not B <= acceptable:
        raise ValueError("target objects must all be acceptable to the origin")
    if B & state.owned_by.get(i, set()):
        raise ValueError("origin already owns a target object")
    return B, S


def _arc_targets(state: TradingState, pointing: set[int], S: set[int]) -> list[int]:
    owners = {
        state.owned[b] for b in pointing if b in state.owned and state.owned[b] in S
    }
    return sorted(owners)


def build_trading_graph(
    state: TradingState, i: int, B: Iterable[int], S: Iterable[int]
) -> TradingGraph:
    """Materialize TG(i, B, S) by closing the pointing rule from i."""
    B, S = _check_tg_preconditions(state, i, B, S)
    arcs: set[tuple[int, int]] = set()
    queue: deque[int] = deque()
    visited = {i}
    for v in _arc_targets(state, B, S):
        arcs.add((i, v))
        if v not in visited:
            visited.add(v)
            queue.append(v)
    while queue:
        u = queue.popleft()
        if u in state.labeled:
            continue
        for v in _arc_targets(state, state.pointing_set(u), S):
            arcs.add((u, v))
            if v not in visited:
                visited.add(v)
                queue.append(v)
    return TradingGraph(
        origin=i,
        targets=frozenset(B),
        nodes=frozenset(S | {i}),
        arcs=frozenset(arcs),
    )


def _reach_labeled_set(state: TradingState, S: set[int]) -> set[int]:
    """Agents in S with a pointing path to a labeled agent (labeled included).

    The pointing arcs between owners do not depend on the origin or its
    target set, so this reachability can be shared across queries.
    """
    start = state.labeled & S
    if not start:
        return set()
    reverse: dict[int, list[int]] = {}
    for j in state.owned_by:
        if j in S and j not in state.labeled:
            for v in _arc_targets(state, state.pointing_set(j), S):
                reverse.setdefault(v, []).append(j)
    reached = set(start)
    queue = deque(start)
    while queue:
        v = queue.popleft()
        for u in reverse.get(v, ()):
            if u not in reached:
                reached.add(u)
                queue.append(u)
    return reached


def max_tg(state: TradingState, i: int, S: Iterable[int]) -> int | None:
    """Best object of L(i) obtainable through trading, or None.

    Among objects whose trading graph admits a path from i to a labeled
    agent, picks the most preferred class and breaks ties within the
    class by the common object order (ascending index).
    """
    B, S = _check_tg_preconditions(state, i, state.instance.prefs[i].objects, S)
    good = _reach_labeled_set(state, S)
    if not good:
        return None
    owned = state.owned
    for cls in state.instance.prefs[i].classes:
        for a in cls:
            holder = owned.get(a)
            if holder is not None and holder in good:
                return a
    return None


def _trading_inplace(state: TradingState, i: int, a: int, S: set[int]) -> None:
    # BFS in TG(i, {a}, S) to the nearest labeled agent; deterministic by
    # exploring pointed-to owners in ascending agent index.
    parent: dict[int, int] = {}
    queue: deque[int] = deque()
    terminal = None
    first = _arc_targets(state, {a}, S)
    for v in first:
        parent[v] = i
        queue.append(v)
    while queue:
        u = queue.popleft()
        if u in state.labeled:
            terminal = u
            break
        for v in _arc_targets(state, state.pointing_set(u), S):
            if v not in parent and v != i:
                parent[v] = u
                queue.append(v)
    if terminal is None:
        raise ValueError(
            f"no trading path from agent {i} to a labeled agent for object {a}"
        )

    path = [terminal]
    while path[-1] != i:
        path.append(parent[path[-1]])
    path.reverse()  # [i = i0, i1, ..., ik = terminal]

    # The object each i_{s+1} cedes to i_s, decided before any transfer.
    gifts: list[int] = []
    for s in range(len(path) - 1):
        giver = path[s + 1]
        if giver in state.labeled:
            pointing = {a} if s == 0 else state.pointing_set(path[s])
            candidates = state.owned_by[giver] & pointing
            gifts.append(min(candidates))
        else:
            (single,) = state.owned_by[giver]
            gifts.append(single)

    instance = state.instance
    terminal_objs = state.owned_by[terminal]
    terminal_objs.discard(gifts[-1])
    if len(terminal_objs) < 2:
        state.labeled.discard(terminal)
    # path[s] receives gifts[s]; intermediates stay within their class.
    for s in range(1, len(path) - 1):
        state.owned_by[path[s]] = {gifts[s]}
    state.owned_by[i] = {gifts[0]}
    state.allocated_class[i] = rank(instance, i, a)
    for s in range(len(path) - 1):
        state.owned[gifts[s]] = path[s]


def trading(state: TradingState, i: int, a: int, S: Iterable[int]) -> TradingState:
    """Shift ownership one step toward i along a shortest trading path.

    Returns an updated copy; the input state is untouched.  Requires a
    path from i to a labeled agent in TG(i, {a}, S).
    """
    _, S = _check_tg_preconditions(state, i, {a}, S)
    out = state.copy()
    _trading_inplace(out, i, a, S)
    return out


# ---------------------------------------------------------------------------
# SDMT-2
# ---------------------------------------------------------------------------


def _strict_state(instance: Instance, order: Sequence[int]) -> TradingState:
    # With singleton classes nobody ever owns two objects, so no agent is
    # ever labeled and trading never fires: the loop is plain greedy.
    assignment = _greedy_strict(instance, order)
    state = TradingState.initial(instance)
    for i, a in assignment.items():
        state.owned[a] = i
        state.owned_by[i] = {a}
        state.available.discard(a)
        state.allocated_class[i] = instance.prefs[i].rank_table[a]
    return state


def sdmt2_state(
    instance: Instance,
    order: Sequence[int],
    fast_path: bool = True,
    trace: list[TradingState] | None = None,
) -> TradingState:
    """Run the SDMT-2 for-loop and return the pre-finalization state.

    ``order`` may be any duplicate-free sequence of agent indices; agents
    not listed never take a turn (used for leave-one-out runs).
    """
    order = tuple(order)
    if len(set(order)) != len(order):
        raise ValueError("order contains a duplicate agent")
    for i in order:
        if not 0 <= i < instance.n1:
            raise ValueError(f"agent index {i} out of range")
    if fast_path and trace is None and instance.is_strict:
        return _strict_state(instance, order)

    state = TradingState.initial(instance)
    prior: set[int] = set()
    available = state.available
    for i in order:
        classes = instance.prefs[i].classes
        sentinel = len(classes) + 1
        j1 = sentinel
        take: tuple[int, ...] = ()
        for k, cls in enumerate(classes, start=1):
            take = tuple(a for a in cls if a in available)
            if take:
                j1 = k
                break
        j2 = sentinel
        best = None
        if state.labeled:
            good = _reach_labeled_set(state, prior)
            if good:
                owned = state.owned
                for k, cls in enumerate(classes, start=1):
                    for a in cls:
                        holder = owned.get(a)
                        if holder is not None and holder in good:
                            j2, best = k, a
                            break
                    if best is not None:
                        break
        if j1 <= j2:
            if take:
                for a in take:
                    state.owned[a] = i
                    available.discard(a)
                state.owned_by[i] = set(take)
                state.allocated_class[i] = j1
                if len(take) >= 2:
                    state.labeled.add(i)
        else:
            _trading_inplace(state, i, best, prior)
        prior.add(i)
        if trace is not None:
            trace.append(state.copy())
    return state


def finalize_state(state: TradingState) -> Matching:
    """Labeled agents keep their highest-order object; others keep theirs."""
    pairs = {}
    for i, objs in state.owned_by.items():
        pairs[i] = min(objs)
    return Matching.of(pairs)


def sdmt2(instance: Instance, order: Sequence[int]) -> Matching:
    """Serial dictatorship with ties, trading-graph version.

    Each agent takes every available object of his best reachable class,
    or trades for an owned object when some strictly better class is
    reachable through a path of same-class swaps ending at an agent who
    owns a spare.
    """
    order = check_order(instance, order)
    return finalize_state(sdmt2_state(instance, order))


def sdmt2_trace(
    instance: Instance, order: Sequence[int]
) -> tuple[Matching, list[TradingState]]:
    """Run sdmt2 keeping a copy of the state after every loop iteration."""
    order = check_order(instance, order)
    trace: list[TradingState] = []
    state = sdmt2_state(instance, order, trace=trace)
    return finalize_state(state), trace
