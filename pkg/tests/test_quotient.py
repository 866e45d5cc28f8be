import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gl2modp.induction import Region
from gl2modp.invariants import QuotientContext
from gl2modp.quotient import (
    StagePlan,
    build_phi,
    chain_element,
    check_hypotheses,
    cleanup,
    exact_character,
    init_state,
    off_target,
    ramified_strings,
    run_unramified,
    schedule_suite,
    socle_report,
    stage_step,
    intermediate_rows,
    ramified_weight_rows,
)
from gl2modp.weights import DigitWeight, SerreWeight, evaluate_schedule, weight_set

SEED = SerreWeight(7, (3, 3))


def targets(seed=SEED):
    return [lw.weight for lw in weight_set(seed)]


@pytest.fixture(scope="module")
def global_state():
    """Example seed at radius 2, through stage 1: Phi maps for the seed and for sigma_{(2,2)}."""
    plan = StagePlan.build(DigitWeight.from_seed(SEED))
    state = init_state(plan, 1, 2, targets())
    return stage_step(state, 1)


class TestPlan:
    def test_example_nodes(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED))
        assert [(n.stage, n.letter, n.exponent, n.weight.r) for n in plan.nodes] == [
            (0, None, None, 24), (1, 1, 28, 16), (2, 0, 3, 10), (3, 1, 14, 30),
        ]
        assert plan.levels == [(1,), (0,), (1,)]
        assert plan.elided == {(): (), (1,): (1,), (0, 1): (1, 0), (0,): (1, 0, 1)}
        assert all(plan.check_formulas().values())

    def test_exponent_is_p_power_times_digit(self):
        plan = StagePlan.build(DigitWeight.from_seed(SerreWeight(11, (4, 6, 5))))
        for n in plan.nodes[1:]:
            par = plan.nodes[n.parent].digits
            assert n.exponent == 11 ** n.letter * (par.r[n.letter] + 1)
            assert evaluate_schedule((n.letter,), plan.nodes[n.parent].weight.r, 11, 3) == n.weight.r

    def test_loop_is_elided(self):
        # A_1 A_0 A_1 A_0 returns to the seed, so the last letter is reached at stage 1
        plan = StagePlan.build(DigitWeight.from_seed(SEED), {"loop": (1, 0, 1, 0, 1)})
        assert plan.elided["loop"] == (1,)
        assert plan.paths["loop"] == (1,)
        # the weights passed on the way round still get their own nodes
        assert len(plan.nodes) == 4

    def test_shared_prefixes_are_merged(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED), {"a": (1, 0), "b": (1, 0, 1)})
        assert len(plan.nodes) == 4
        assert plan.paths["b"][:2] == plan.paths["a"]
        assert sorted(plan.labels_through(1)) == ["a", "b"]

    def test_unramified_f2_has_no_off_target_weights(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED))
        assert all(not v for v in off_target(plan, targets()).values())

    @pytest.mark.parametrize("r", [(3, 4, 5), (5, 3, 6, 4)])
    def test_formulas_hold_for_larger_f(self, r):
        seed = SerreWeight(11, r)
        assert all(StagePlan.build(DigitWeight.from_seed(seed)).check_formulas().values())


class TestHypotheses:
    @pytest.mark.parametrize("r", [(2, 3), (3, 4), (0, 3)])
    def test_rejects_non_generic(self, r):
        with pytest.raises(ValueError):
            check_hypotheses(SerreWeight(7, r))

    def test_f1_rejected(self):
        with pytest.raises(ValueError, match="f >= 2"):
            run_unramified(SerreWeight(11, (5,)))


class TestPhi:
    def test_seed_map_sends_highest_vector(self, global_state):
        phi = global_state.phis[0]
        M = phi.model
        assert phi.generator == M.at(phi.generator.support()[0], M.x_top)

    def test_stage_one_generator_certified(self, global_state):
        rec = global_state.records[1]
        assert rec.evidence == "global" and rec.survived
        assert rec.character == SerreWeight(7, (2, 2), 28).highest_char() == rec.certified.highest_char()

    def test_phi_rejects_wrong_weight(self, global_state):
        M = global_state.model
        with pytest.raises(ArithmeticError):
            build_phi(M.build_element("s", 1, 28), SerreWeight(7, (3, 3)), global_state.ctx)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_phi_is_equivariant(global_state, seed):
    rng = np.random.default_rng(seed)
    phi = global_state.phis[1]
    ctx = global_state.ctx
    lm = global_state.local_model(phi.source)
    vec = rng.integers(0, lm.q, lm.dim)
    y = lm.at(Region.ball(lm.q, 0).vertices()[0], vec)
    g = lm.random_K(rng)
    lhs = phi.apply(lm.act(g, y))
    rhs = phi.model.act(g, phi.apply(y))
    assert ctx.contains(lhs - rhs)


class TestStages:
    def test_stage_order_does_not_matter(self):
        seed = SerreWeight(11, (4, 6, 5))
        plan = StagePlan.build(DigitWeight.from_seed(seed))
        k = max(range(1, plan.depth + 1), key=lambda j: len(plan.at_stage(j)))
        n = len(plan.at_stage(k))
        assert n > 1
        runs = []
        for order in (list(range(n)), list(reversed(range(n)))):
            state = init_state(plan, 1, 0, targets(seed))
            for j in range(1, k):
                stage_step(state, j)
            stage_step(state, k, order=order)
            runs.append({i: (rec.predicted, rec.survived) for i, rec in state.records.items()})
        assert runs[0] == runs[1]

    def test_out_of_order_stage(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED))
        with pytest.raises(ValueError):
            stage_step(init_state(plan), 2)

    def test_cleanup_keeps_plan_weights(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED))
        state = init_state(plan, 1, 1, targets())
        for k in range(1, plan.depth + 1):
            stage_step(state, k)
        cleanup(state)
        assert state.removed == []
        assert len(socle_report(state)) == 4

    def test_cleanup_removes_and_propagates(self):
        plan = StagePlan.build(DigitWeight.from_seed(SEED))
        state = init_state(plan, 1, 1, targets())
        for k in range(1, plan.depth + 1):
            stage_step(state, k)
        # dropping sigma_{(2,2)} also drops everything built on it
        keep = {n.weight for n in plan.nodes} - {plan.nodes[1].weight}
        cleanup(state, keep=keep)
        assert [d["node"] for d in socle_report(state)] == [0]

    def test_local_run_reaches_all_four(self):
        rep = run_unramified(SEED, radius=1)
        assert rep.passed, rep.checks
        assert rep.first_stage == {"{}": 0, "{1}": 1, "{0,1}": 2, "{0}": 3}
        assert [e["certified_param"] for e in rep.entries] == [24, 16, 10, 30]

    def test_plan_only_run(self):
        rep = run_unramified(SEED, radius=0)
        assert rep.passed
        assert [e["evidence"] for e in rep.entries] == ["seed", "plan", "plan", "plan"]


class TestCharacters:
    def test_chain_element_characters(self):
        from conftest import tree_model
        M = tree_model(7, (3, 3), 1, 2)
        assert exact_character(chain_element(M, (41, 31))).alpha is not None
        x = chain_element(M, (0,))
        assert exact_character(x) == exact_character(M.build_element("s", 1, 0))

    def test_chain_of_one_is_s(self):
        from conftest import tree_model
        M = tree_model(7, (3, 3), 1, 2)
        assert chain_element(M, (28,)) == M.build_element("s", 1, 28)


class TestScheduleSuite:
    def test_pass(self):
        rep = schedule_suite(SerreWeight(11, (4, 6, 5)), samples=5)
        assert rep.passed and not rep.witnesses

    def test_corrupted_r_gives_witness(self):
        rep = schedule_suite(SerreWeight(7, (0, 3)), samples=2)
        assert not rep.passed
        wit = rep.witnesses[0]
        assert wit["evaluated"] != wit["closed_form"]
        assert evaluate_schedule(tuple(wit["schedule"]), wit["r_vec"][0] + 7 * wit["r_vec"][1], 7, 2) == wit["evaluated"]


class TestTables:
    def test_intermediate_rows_shape(self):
        rows = intermediate_rows(SerreWeight(11, (5, 5, 5)))
        assert {r["J"] for r in rows} == {"{1}", "{0,2}"}
        # f = 3: one (r_j, w_j) pair per embedding
        assert all(len(r["numeric"].strip("()").split(",")) == 6 for r in rows)
        assert rows[0] == {"J": "{1}", "position": 1, "numeric": "(4, 6, 4, 0, 5, 0)",
                           "symbolic": "(p - r_0 - 2, r_0 + 1, r_1 - 1, 0, r_2, 0)"}

    def test_ramified_rows_sixteen(self):
        rows = ramified_weight_rows(SerreWeight(11, (5, 5)), 2)
        assert len(rows) == 16
        assert len({tuple(r["tuple"]) for r in rows}) == 16

    def test_ramified_strings(self):
        s = ramified_strings(2, (0, 1))
        assert set(s.values()) == {(1,), (1, 0), (1, 0, 1)}
        assert ((0,), (1, 1)) in s
