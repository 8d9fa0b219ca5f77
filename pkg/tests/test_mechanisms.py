import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairmatch.mechanisms import (
    TradingState,
    build_trading_graph,
    find_augmenting_path,
    finalize_state,
    max_tg,
    sdm,
    sdmt1,
    sdmt1_phases,
    sdmt2,
    sdmt2_state,
    sdmt2_trace,
    trading,
)
from fairmatch.model import (
    Instance,
    Matching,
    StrictnessError,
    parse_instance,
    random_instance,
    rank,
    signature_of,
    triangle_instance,
)

EXAMPLE_3_1 = parse_instance("agents: 2\nobjects: 2\n1: (a1 a2)\n2: (a1)\n")
THEOREM_1 = parse_instance("agents: 2\nobjects: 2\n1: (a1) (a2)\n2: (a1) (a2)\n")


def figure_1_state() -> TradingState:
    """The worked trading-graph state: objects a..i are 0..8, agent 6 is 5."""
    inst = Instance.of(
        [
            [[0, 1, 2, 3, 4, 5]],  # 1 owns a,b,c,f; labeled
            [[3, 5, 7, 8]],        # 2 owns i
            [[4]],                 # 3 owns e
            [[1, 2, 4, 6]],        # 4 owns g
            [[0, 7, 8]],           # 5 owns h
            [[3, 4, 6, 7]],        # 6 owns nothing
        ],
        n2=9,
    )
    state = TradingState.initial(inst)
    for agent, objs in {0: [0, 1, 2, 5], 1: [8], 2: [4], 3: [6], 4: [7]}.items():
        state.owned_by[agent] = set(objs)
        for o in objs:
            state.owned[o] = agent
            state.available.discard(o)
        state.allocated_class[agent] = 1
    state.labeled = {0}
    state.check_invariants()
    return state


class TestSdm:
    def test_theorem1_instance_both_orders(self):
        assert sdm(THEOREM_1, (0, 1)).pairs == ((0, 0), (1, 1))
        assert sdm(THEOREM_1, (1, 0)).pairs == ((0, 1), (1, 0))

    def test_triangle_reverse_order(self):
        assert sdm(triangle_instance(3), (2, 1, 0)).pairs == ((1, 1), (2, 0))

    def test_rejects_ties(self):
        with pytest.raises(StrictnessError):
            sdm(EXAMPLE_3_1, (0, 1))

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            sdm(THEOREM_1, (0, 0))


class TestAugmentingPath:
    def test_single_edge(self):
        assert find_augmenting_path({0: [0]}, {}, 0) == [0, 0]

    def test_length_three(self):
        edges = [(0, 0), (0, 1), (1, 0)]
        assert find_augmenting_path(edges, {0: 0}, 1) == [1, 0, 0, 1]

    def test_no_free_object(self):
        assert find_augmenting_path([(1, 0)], {0: 0}, 1) is None

    def test_source_must_be_unmatched(self):
        with pytest.raises(ValueError):
            find_augmenting_path({0: [0]}, {0: 0}, 0)


class TestSdmt1:
    def test_example_3_1(self):
        assert sdmt1(EXAMPLE_3_1, (0, 1)).pairs == ((0, 1), (1, 0))

    def test_single_agent(self):
        inst = parse_instance("agents: 1\nobjects: 1\n1: (a1)\n")
        assert sdmt1(inst, (0,)).pairs == ((0, 0),)

    def test_matches_sdm_on_strict_triangle(self):
        tri = triangle_instance(3)
        for order in itertools.permutations(range(3)):
            assert sdmt1(tri, order) == sdm(tri, order)

    def test_phase_outcome_is_final(self):
        # once an agent's phase ends, his matched status and rank are frozen
        for seed in range(30):
            inst = random_instance(5, 5, tie_density=0.6, list_density=0.8,
                                   seed=seed)
            order = tuple(np.random.Generator(
                np.random.PCG64(seed)).permutation(5).tolist())
            final, phases = sdmt1_phases(inst, order)
            for agent, committed, snapshot in phases:
                if committed is None:
                    assert final.get(agent) is None
                else:
                    assert snapshot[agent] in committed
                    got = final.get(agent)
                    assert got is not None
                    assert rank(inst, agent, got) == rank(
                        inst, agent, snapshot[agent]
                    )


class TestTradingGraph:
    def test_figure_arcs(self):
        state = figure_1_state()
        graph = build_trading_graph(state, 5, {6, 7}, {0, 1, 2, 3, 4})
        assert graph.successors(5) == (3, 4)
        assert graph.successors(3) == (0, 2)
        assert graph.successors(4) == (0, 1)
        assert graph.successors(1) == (0, 4)
        assert graph.successors(0) == ()  # labeled agents are sinks
        assert graph.nodes == frozenset(range(6))

    def test_unowned_targets_give_no_arcs(self):
        state = figure_1_state()
        graph = build_trading_graph(state, 5, {3}, {0, 1, 2, 3, 4})  # d unowned
        assert graph.arcs == frozenset()

    def test_single_arc_to_labeled_sink(self):
        inst = Instance.of([[[0, 1]], [[0, 1]]], n2=2)
        state = TradingState.initial(inst)
        state.owned_by[0] = {0, 1}
        state.owned = {0: 0, 1: 0}
        state.available = set()
        state.allocated_class[0] = 1
        state.labeled = {0}
        graph = build_trading_graph(state, 1, {0, 1}, {0})
        assert graph.arcs == frozenset({(1, 0)})

    def test_preconditions(self):
        state = figure_1_state()
        with pytest.raises(ValueError):
            build_trading_graph(state, 4, {7}, {0, 1, 2, 3, 4})  # origin in S
        with pytest.raises(ValueError):
            build_trading_graph(state, 5, {0}, {0, 1, 2})  # a not acceptable to 6
        with pytest.raises(ValueError):
            build_trading_graph(state, 4, {7}, {0, 1, 2})  # 5 owns h already


class TestMaxTg:
    def test_figure_value(self):
        state = figure_1_state()
        assert max_tg(state, 5, {0, 1, 2, 3, 4}) == 6  # object g

    def test_none_without_labeled_agent(self):
        state = figure_1_state()
        state.labeled = set()
        state.owned_by[0] = {0}
        for o in (1, 2, 5):
            del state.owned[o]
            state.available.add(o)
        assert max_tg(state, 5, {0, 1, 2, 3, 4}) is None

    def test_agrees_with_per_object_path_search(self):
        # cross-check the shared-reachability shortcut against the
        # literal per-object trading-graph definition
        def naive(state, i, S):
            inst = state.instance
            for cls in inst.prefs[i].classes:
                hits = []
                for a in cls:
                    graph = build_trading_graph(state, i, {a}, S)
                    succ = {}
                    for u, v in graph.arcs:
                        succ.setdefault(u, []).append(v)
                    stack, seen = [i], set()
                    found = False
                    while stack:
                        u = stack.pop()
                        for v in succ.get(u, ()):
                            if v in state.labeled:
                                found = True
                            if v not in seen:
                                seen.add(v)
                                stack.append(v)
                    if found:
                        hits.append(a)
                if hits:
                    return min(hits)
            return None

        state = figure_1_state()
        S = {0, 1, 2, 3, 4}
        assert max_tg(state, 5, S) == naive(state, 5, S)
        for seed in range(40):
            inst = random_instance(5, 5, tie_density=0.7, list_density=0.9,
                                   seed=seed)
            order = list(range(5))
            st_run = sdmt2_state(inst, order[:4], fast_path=False)
            i = 4
            if set(inst.prefs[i].objects) & (st_run.owned_by.get(i) or set()):
                continue
            assert max_tg(st_run, i, set(order[:4])) == naive(
                st_run, i, set(order[:4])
            )


class TestTrading:
    def test_figure_outcome(self):
        state = figure_1_state()
        out = trading(state, 5, 6, {0, 1, 2, 3, 4})
        assert out.owned_by[5] == {6}
        assert out.owned_by[3] == {1}  # b preferred to c in the common order
        assert out.owned_by[0] == {0, 2, 5}
        assert 0 in out.labeled
        out.check_invariants()
        # the input state is untouched
        assert state.owned_by[3] == {6}

    def test_highest_order_rule_unlabels_terminal(self):
        inst = Instance.of([[[0, 1]], [[0, 1]]], n2=2)
        state = TradingState.initial(inst)
        state.owned_by[0] = {0, 1}
        state.owned = {0: 0, 1: 0}
        state.available = set()
        state.allocated_class[0] = 1
        state.labeled = {0}
        out = trading(state, 1, 0, {0})
        assert out.owned_by[1] == {0}
        assert out.owned_by[0] == {1}
        assert out.labeled == set()

    def test_requires_path(self):
        state = figure_1_state()
        with pytest.raises(ValueError):
            trading(state, 5, 4, {0, 1, 2, 3, 4})  # e leads only to agent 3

    def test_conservation(self):
        state = figure_1_state()
        before = sorted(state.owned)
        out = trading(state, 5, 6, {0, 1, 2, 3, 4})
        assert sorted(out.owned) == before
        assert all(out.owned[o] in out.owned_by for o in out.owned)


class TestSdmt2:
    def test_example_3_1_hand_run(self):
        trace: list[TradingState] = []
        state = sdmt2_state(EXAMPLE_3_1, (0, 1), trace=trace)
        assert trace[0].owned_by[0] == {0, 1}
        assert trace[0].labeled == {0}
        matching = finalize_state(state)
        assert {i for i, _ in matching.pairs} == {0, 1}
        assert signature_of(EXAMPLE_3_1, matching, (0, 1)) == (1, 1)
        assert signature_of(EXAMPLE_3_1, matching, (0, 1)) == signature_of(
            EXAMPLE_3_1, sdmt1(EXAMPLE_3_1, (0, 1)), (0, 1)
        )

    def test_equals_sdm_on_strict_instances(self):
        for seed in range(25):
            inst = random_instance(4, 4, tie_density=0.0, list_density=0.8,
                                   seed=seed)
            for order in itertools.permutations(range(4)):
                expected = sdm(inst, order)
                assert sdmt2(inst, order) == expected
                # and with the strict shortcut disabled
                assert finalize_state(
                    sdmt2_state(inst, order, fast_path=False)
                ) == expected

    def test_empty_list_agent_unmatched(self):
        inst = parse_instance("agents: 2\nobjects: 2\n1:\n2: (a1 a2)\n")
        matching = sdmt2(inst, (0, 1))
        assert matching.get(0) is None
        assert matching.size == 1

    def test_objects_never_deallocated_and_unmatched_stay_frozen(self):
        for seed in range(30):
            inst = random_instance(5, 5, tie_density=0.5, list_density=0.8,
                                   seed=seed)
            order = tuple(np.random.Generator(
                np.random.PCG64((seed, 1))).permutation(5).tolist())
            matching, trace = sdmt2_trace(inst, order)
            allocated: set[int] = set()
            for state in trace:
                now = set(state.owned)
                assert allocated <= now  # once allocated, stays allocated
                allocated = now
                state.check_invariants()
            # agents left unmatched never had a path to a labeled agent later
            unmatched = [i for i in order if matching.get(i) is None]
            processed = list(order)
            final = trace[-1]
            for i in unmatched:
                if not inst.prefs[i].objects:
                    continue
                S = set(processed) - {i}
                good = set()
                if final.labeled:
                    graph = build_trading_graph(
                        final, i, set(inst.prefs[i].objects) -
                        (final.owned_by.get(i) or set()), S)
                    succ = {}
                    for u, v in graph.arcs:
                        succ.setdefault(u, []).append(v)
                    stack = [i]
                    while stack:
                        u = stack.pop()
                        for v in succ.get(u, ()):
                            if v not in good:
                                good.add(v)
                                stack.append(v)
                assert not (good & final.labeled)

    def test_signature_equals_sdmt1_on_random_instances(self):
        for seed in range(60):
            inst = random_instance(
                1 + seed % 6, 1 + (seed * 3) % 6,
                tie_density=(seed % 4) / 3, list_density=0.8, seed=seed,
            )
            rng = np.random.Generator(np.random.PCG64((seed, 2)))
            order = tuple(int(v) for v in rng.permutation(inst.n1))
            m1, m2 = sdmt1(inst, order), sdmt2(inst, order)
            assert {i for i, _ in m1.pairs} == {i for i, _ in m2.pairs}
            assert signature_of(inst, m1, order) == signature_of(inst, m2, order)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(0, 2**32),
    st.integers(2, 5),
    st.integers(2, 5),
    st.sampled_from([0.0, 0.3, 0.7, 1.0]),
)
def test_mechanism_outputs_are_valid_matchings(seed, n1, n2, tie):
    inst = random_instance(n1, n2, tie, 0.8, seed=seed)
    order = tuple(
        int(v) for v in np.random.Generator(np.random.PCG64(seed)).permutation(n1)
    )
    for mech in (sdmt1, sdmt2):
        matching = mech(inst, order)
        matching.validate(inst)
