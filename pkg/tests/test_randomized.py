import math

import numpy as np
import pytest

from fairmatch.mechanisms import sdm, sdmt2_state
from fairmatch.model import parse_instance, random_instance, triangle_instance
from fairmatch.randomized import (
    F,
    RandomDraw,
    dual_certificate,
    estimate_expected_weight,
    g_eval,
    g_integral,
    order_from_draw,
    rsdm_ties,
    threshold_yc,
)

EXAMPLE_3_1 = parse_instance("agents: 2\nobjects: 2\n1: (a1 a2)\n2: (a1)\n")


class TestG:
    def test_endpoints(self):
        assert g_eval(1.0) == 1.0
        assert g_eval(0.0) == pytest.approx(1.0 / math.e, abs=1e-15)

    def test_monotone(self):
        ys = [k / 100 for k in range(101)]
        vals = [g_eval(y) for y in ys]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_domain_checked(self):
        with pytest.raises(ValueError):
            g_eval(-0.1)
        with pytest.raises(ValueError):
            g_eval(1.1)

    def test_integral_identity_exact(self):
        # integral of g over [0, theta] plus 1 - g(theta) is the constant F
        for k in range(1001):
            theta = k / 1000
            assert abs(g_integral(theta) + 1.0 - g_eval(theta) - F) < 1e-12


class TestOrderFromDraw:
    def test_low_draw_goes_first(self):
        assert order_from_draw((1.0, 1.0), (0.1, 0.9)) == (0, 1)
        assert order_from_draw((1.0, 1.0), (0.9, 0.1)) == (1, 0)

    def test_ties_break_by_index(self):
        assert order_from_draw((1.0, 1.0, 1.0), (0.5, 0.5, 0.5)) == (0, 1, 2)

    def test_weight_scales_priority(self):
        # same draw, heavier agent goes first
        assert order_from_draw((1.0, 3.0), (0.5, 0.5)) == (1, 0)


class TestRsdmTies:
    def test_deterministic_given_seed(self):
        a = rsdm_ties(EXAMPLE_3_1, 7)
        b = rsdm_ties(EXAMPLE_3_1, 7)
        assert a == b

    def test_strict_lists_match_sdm_under_same_order(self):
        for seed in range(20):
            inst = random_instance(5, 5, tie_density=0.0, list_density=0.8,
                                   seed=seed)
            matching, draw, order = rsdm_ties(inst, seed)
            assert matching == sdm(inst, order)
            assert order == order_from_draw(inst.weights, draw.y)

    def test_output_is_always_po(self):
        from fairmatch.oracles import is_pareto_optimal

        for seed in range(20):
            inst = random_instance(4, 5, tie_density=0.6, list_density=0.7,
                                   seed=seed)
            matching, _, _ = rsdm_ties(inst, seed)
            ok, _ = is_pareto_optimal(inst, matching)
            assert ok


class TestDualCertificate:
    def test_single_agent_extreme_draw(self):
        inst = parse_instance("agents: 1\nobjects: 1\n1: (a1)\n")
        matching, _, _ = rsdm_ties(inst, 0)
        cert = dual_certificate(inst, matching, RandomDraw((0.0,)))
        assert cert.alpha[0] == pytest.approx((1 / math.e) / F)
        assert cert.beta[0] == pytest.approx((1 - 1 / math.e) / F)
        assert cert.beta[0] == pytest.approx(1.0)
        assert cert.alpha[0] + cert.beta[0] == pytest.approx(1.0 / F)

    def test_empty_matching_zero_duals(self):
        inst = parse_instance("agents: 1\nobjects: 1\n1:\n")
        from fairmatch.model import Matching

        cert = dual_certificate(inst, Matching.of({}), RandomDraw((0.5,)))
        assert cert.primal_value == 0.0
        assert cert.dual_value == 0.0
        assert all(v == 0.0 for v in cert.alpha + cert.beta)

    def test_primal_equals_F_times_dual(self):
        for seed in range(30):
            inst = random_instance(5, 5, tie_density=0.5, list_density=0.8,
                                   seed=seed)
            matching, draw, _ = rsdm_ties(inst, (seed, 1))
            cert = dual_certificate(inst, matching, draw)
            if cert.dual_value > 0:
                assert cert.primal_value == pytest.approx(
                    F * cert.dual_value, rel=1e-12
                )


class TestThreshold:
    def test_object_acceptable_only_to_agent(self):
        inst = parse_instance(
            "agents: 2\nobjects: 2\n1: (a1 a2)\n2: (a1)\n"
        )
        # a2 is acceptable only to agent 1: unmatched without him
        assert threshold_yc(inst, 0, 1, {1: 0.3}) == 1.0

    def test_labeled_owner_case(self):
        # without agent 2, agent 1 owns both objects and is labeled
        assert threshold_yc(EXAMPLE_3_1, 1, 0, {0: 0.8}) == 1.0

    def test_unit_weight_equalizer(self):
        # two agents compete for one object; the equalizing draw is Y_2
        inst = parse_instance("agents: 2\nobjects: 1\n1: (a1)\n2: (a1)\n")
        yc = threshold_yc(inst, 0, 0, {1: 0.5})
        assert yc == pytest.approx(0.5, abs=1e-12)

    def test_rejects_unacceptable_pair(self):
        with pytest.raises(ValueError):
            threshold_yc(EXAMPLE_3_1, 1, 1, {0: 0.5})

    def test_rejects_wrong_draw_keys(self):
        with pytest.raises(ValueError):
            threshold_yc(EXAMPLE_3_1, 0, 0, {0: 0.5})

    def test_heavier_rival_can_force_zero(self):
        # rival weight so large that no draw can beat him
        inst = parse_instance(
            "agents: 2\nobjects: 1\nweights: 1 10\n1: (a1)\n2: (a1)\n"
        )
        assert threshold_yc(inst, 0, 0, {1: 0.0}) == 0.0

    def test_dominance_on_example(self):
        # below the threshold the agent is always matched in the full run
        inst = parse_instance("agents: 2\nobjects: 1\n1: (a1)\n2: (a1)\n")
        yc = threshold_yc(inst, 0, 0, {1: 0.5})
        from fairmatch.mechanisms import sdmt2
        from fairmatch.randomized import order_from_draw as ofd

        for v in (0.05, 0.25, 0.45):
            assert v < yc
            order = ofd(inst.weights, (v, 0.5))
            assert sdmt2(inst, order).get(0) is not None


class TestEstimateExpectedWeight:
    def test_single_pair_instance(self):
        inst = parse_instance("agents: 1\nobjects: 1\n1: (a1)\n")
        mean, se = estimate_expected_weight(inst, 50, seed=0)
        assert mean == 1.0 and se == 0.0

    def test_triangle_matches_exact_expectation(self):
        mean, se = estimate_expected_weight(triangle_instance(3), 4000, seed=1)
        assert abs(mean - 13 / 6) <= 3 * se + 1e-9

    def test_deterministic_and_trial_streams_independent(self):
        inst = triangle_instance(4)
        a = estimate_expected_weight(inst, 100, seed=9)
        b = estimate_expected_weight(inst, 100, seed=9)
        assert a == b
        # trial t's stream is (seed, t): a prefix has the same trial values
        m, _, _ = rsdm_ties(inst, (9, 17))
        values = [rsdm_ties(inst, (9, t))[0].weight(inst) for t in range(30)]
        assert values[17] == m.weight(inst)


class TestPartialOrderRuns:
    def test_leave_one_out_state(self):
        # the order may omit agents entirely
        state = sdmt2_state(EXAMPLE_3_1, (0,))
        assert state.owned_by[0] == {0, 1}
        assert 1 not in state.owned_by
