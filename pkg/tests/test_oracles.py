import itertools

import numpy as np
import pytest

from fairmatch.mechanisms import sdm, sdmt1
from fairmatch.model import (
    Matching,
    SizeGuardError,
    all_matchings,
    parse_instance,
    random_instance,
    signature_of,
    triangle_instance,
)
from fairmatch.oracles import (
    Coalition,
    brute_force_pareto_set,
    build_envy_graph,
    enumerate_pareto,
    enumerate_spm,
    is_pareto_optimal,
    is_strong_priority,
    max_weight_matching,
    order_for_matching,
    verify_coalition,
)

EXAMPLE_3_1 = parse_instance("agents: 2\nobjects: 2\n1: (a1 a2)\n2: (a1)\n")
THEOREM_1 = parse_instance("agents: 2\nobjects: 2\n1: (a1) (a2)\n2: (a1) (a2)\n")


def random_orders(n1: int, count: int, seed) -> list[tuple[int, ...]]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return [tuple(int(v) for v in rng.permutation(n1)) for _ in range(count)]


class TestIsParetoOptimal:
    def test_bad_tie_break_is_not_po(self):
        ok, witness = is_pareto_optimal(EXAMPLE_3_1, Matching.of({0: 0}))
        assert not ok
        assert witness.kind == "augmenting-path"
        assert witness.agents[0] == 1  # unmatched agent 2 leads the coalition
        assert verify_coalition(EXAMPLE_3_1, Matching.of({0: 0}), witness)

    def test_unique_po_matching(self):
        ok, witness = is_pareto_optimal(EXAMPLE_3_1, Matching.of({0: 1, 1: 0}))
        assert ok and witness is None

    def test_empty_matching_not_po(self):
        ok, witness = is_pareto_optimal(EXAMPLE_3_1, Matching.of({}))
        assert not ok
        assert witness.kind == "augmenting-path"
        assert len(witness.agents) == 1

    def test_invalid_matching_rejected(self):
        with pytest.raises(ValueError):
            is_pareto_optimal(EXAMPLE_3_1, Matching.of({1: 1}))

    def test_witnesses_always_verify(self):
        for seed in range(40):
            inst = random_instance(4, 4, tie_density=0.5, list_density=0.7,
                                   seed=seed)
            for mu in all_matchings(inst):
                ok, witness = is_pareto_optimal(inst, mu)
                if not ok:
                    assert verify_coalition(inst, mu, witness)

    def test_agrees_with_brute_force_dominance_exhaustively(self):
        # every matching of every 2x2 profile with ties
        from fairmatch.audits import all_preference_lists
        from fairmatch.model import Instance

        lists = all_preference_lists(2)
        for pl1 in lists:
            for pl2 in lists:
                inst = Instance.of([pl1.classes, pl2.classes], n2=2)
                po_set = brute_force_pareto_set(inst)
                for mu in all_matchings(inst):
                    ok, _ = is_pareto_optimal(inst, mu)
                    assert ok == (mu in po_set)


class TestBruteForce:
    def test_example_3_1(self):
        assert brute_force_pareto_set(EXAMPLE_3_1) == {Matching.of({0: 1, 1: 0})}

    def test_theorem_1_two_perfect_matchings(self):
        po = brute_force_pareto_set(THEOREM_1)
        assert po == {Matching.of({0: 0, 1: 1}), Matching.of({0: 1, 1: 0})}
        assert all(m.size == 2 for m in po)

    def test_empty_list_singleton(self):
        inst = parse_instance("agents: 1\nobjects: 1\n1:\n")
        assert brute_force_pareto_set(inst) == {Matching.of({})}

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            brute_force_pareto_set(triangle_instance(7))

    def test_po_size_at_least_half_maximum(self):
        for seed in range(30):
            inst = random_instance(4, 4, tie_density=0.4, list_density=0.8,
                                   seed=seed)
            best = max(m.size for m in all_matchings(inst))
            for mu in brute_force_pareto_set(inst):
                assert 2 * mu.size >= best


class TestMaxWeight:
    def test_triangle_unit_weights(self):
        weight, matching = max_weight_matching(triangle_instance(3))
        assert weight == 3 and matching.size == 3

    def test_theorem_1(self):
        weight, _ = max_weight_matching(THEOREM_1)
        assert weight == 2

    def test_all_lists_empty(self):
        inst = parse_instance("agents: 2\nobjects: 2\n1:\n2:\n")
        weight, matching = max_weight_matching(inst)
        assert weight == 0 and matching.size == 0

    def test_exact_against_brute_force(self):
        from dataclasses import replace

        for seed in range(40):
            inst = random_instance(4, 4, tie_density=0.3, list_density=0.7,
                                   seed=seed)
            weights = tuple(
                float(w)
                for w in np.random.Generator(
                    np.random.PCG64(seed)).integers(1, 9, inst.n1)
            )
            inst = replace(inst, weights=weights)
            expected = max(m.weight(inst) for m in all_matchings(inst))
            got, matching = max_weight_matching(inst)
            assert got == expected
            assert matching.weight(inst) == expected

    def test_deterministic_lexicographic_tie_break(self):
        weight, matching = max_weight_matching(THEOREM_1)
        assert matching.pairs == ((0, 0), (1, 1))


class TestStrongPriority:
    def test_sdmt1_output_is_spm(self):
        for order in itertools.permutations(range(2)):
            mu = sdmt1(EXAMPLE_3_1, order)
            assert is_strong_priority(EXAMPLE_3_1, mu, order)

    def test_bad_tie_break_is_not_spm(self):
        mu = Matching.of({0: 0})
        assert not is_strong_priority(EXAMPLE_3_1, mu, (0, 1))
        assert not is_strong_priority(EXAMPLE_3_1, mu, (1, 0))

    def test_sdmt1_signature_is_lexicographic_minimum(self):
        for seed in range(40):
            inst = random_instance(4, 4, tie_density=0.5, list_density=0.8,
                                   seed=seed)
            sigs = [
                signature_of(inst, m, range(inst.n1)) for m in all_matchings(inst)
            ]
            assert signature_of(
                inst, sdmt1(inst, range(inst.n1)), range(inst.n1)
            ) == min(sigs)


class TestEnumerateSpm:
    def test_strict_lists_give_single_spm(self):
        inst = random_instance(4, 4, tie_density=0.0, list_density=0.9, seed=3)
        order = (2, 0, 3, 1)
        assert enumerate_spm(inst, order) == {sdm(inst, order)}

    def test_dichotomous_two_by_two(self):
        inst = parse_instance("agents: 2\nobjects: 2\n1: (a1 a2)\n2: (a1 a2)\n")
        spms = enumerate_spm(inst, (0, 1))
        assert spms == {Matching.of({0: 0, 1: 1}), Matching.of({0: 1, 1: 0})}

    def test_every_member_is_spm(self):
        for seed in range(20):
            inst = random_instance(4, 4, tie_density=0.6, list_density=0.8,
                                   seed=seed)
            for order in random_orders(4, 2, (seed, 1)):
                for mu in enumerate_spm(inst, order):
                    assert is_strong_priority(inst, mu, order)


class TestEnumeratePareto:
    def test_example_3_1_single(self):
        assert enumerate_pareto(EXAMPLE_3_1) == {Matching.of({0: 1, 1: 0})}

    def test_theorem_1_two(self):
        assert len(enumerate_pareto(THEOREM_1)) == 2

    def test_equals_brute_force_on_random_instances(self):
        for seed in range(100):
            inst = random_instance(
                1 + seed % 4, 1 + (seed * 5) % 4,
                tie_density=(seed % 4) / 3, list_density=0.7, seed=seed,
            )
            assert enumerate_pareto(inst) == brute_force_pareto_set(inst)

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            enumerate_pareto(triangle_instance(6))


class TestOrderForMatching:
    def test_example_3_1(self):
        mu = Matching.of({0: 1, 1: 0})
        sigma = order_for_matching(EXAMPLE_3_1, mu)
        assert is_strong_priority(EXAMPLE_3_1, mu, sigma)
        assert signature_of(EXAMPLE_3_1, mu, sigma) == (1, 1)

    def test_strict_po_matchings_reproducible_by_sdm(self):
        for seed in range(20):
            inst = random_instance(4, 4, tie_density=0.0, list_density=0.8,
                                   seed=seed)
            for mu in brute_force_pareto_set(inst):
                sigma = order_for_matching(inst, mu)
                assert signature_of(inst, sdm(inst, sigma), sigma) == (
                    signature_of(inst, mu, sigma)
                )

    def test_single_first_choice_agent(self):
        inst = parse_instance("agents: 1\nobjects: 2\n1: (a1) (a2)\n")
        sigma = order_for_matching(inst, Matching.of({0: 0}))
        assert sigma == (0,)

    def test_rejects_non_po_input(self):
        with pytest.raises(ValueError):
            order_for_matching(EXAMPLE_3_1, Matching.of({0: 0}))

    def test_unmatched_envious_agent_ordered_last(self):
        inst = parse_instance("agents: 2\nobjects: 1\n1: (a1)\n2: (a1)\n")
        mu = Matching.of({1: 0})
        envy = build_envy_graph(inst, mu)
        assert (0, 1) in envy.red
        sigma = order_for_matching(inst, mu)
        assert sigma == (1, 0)
        assert is_strong_priority(inst, mu, sigma)

    def test_closure_over_all_po_matchings(self):
        for seed in range(30):
            inst = random_instance(4, 4, tie_density=0.5, list_density=0.8,
                                   seed=seed)
            for mu in brute_force_pareto_set(inst):
                sigma = order_for_matching(inst, mu)
                assert is_strong_priority(inst, mu, sigma)
