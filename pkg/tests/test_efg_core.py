import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccelearn.efg import (
    BehavioralStrategy,
    NormalFormPlan,
    PlanCapExceeded,
    TreeBuilder,
    TreeError,
    behavioral_reach,
    canonicalize,
    count_plans,
    enumerate_plans,
    plan_reach,
    validate,
)
from ccelearn.games import kuhn3, random_game


def test_validate_degenerate_chance_game():
    b = TreeBuilder(1)
    root = b.add_chance(None, None)
    b.add_terminal(root, "h", payoffs=[1.0], prob=0.5)
    b.add_terminal(root, "t", payoffs=[0.0], prob=0.5)
    assert validate(b.finalize()) == []


def test_validate_infoset_action_mismatch():
    b = TreeBuilder(1)
    root = b.add_chance(None, None)
    n1 = b.add_decision(root, "x", player=0, infoset_key="I", actions=["a", "b"], prob=0.5)
    n2 = b.add_decision(root, "y", player=0, infoset_key="I", actions=["a", "b", "c"], prob=0.5)
    for lab in ("a", "b"):
        b.add_terminal(n1, lab, payoffs=[0.0])
    for lab in ("a", "b", "c"):
        b.add_terminal(n2, lab, payoffs=[0.0])
    issues = validate(b.finalize())
    assert any("infoset action mismatch" in msg for msg in issues)


def test_validate_perfect_recall_violation():
    # player 0 reaches infoset J with different own histories (via a then b vs direct)
    b = TreeBuilder(1)
    root = b.add_decision(None, None, player=0, infoset_key="I", actions=["a", "b"])
    ja = b.add_decision(root, "a", player=0, infoset_key="J", actions=["x", "y"])
    jb = b.add_decision(root, "b", player=0, infoset_key="J", actions=["x", "y"])
    for node in (ja, jb):
        for lab in ("x", "y"):
            b.add_terminal(node, lab, payoffs=[0.0])
    issues = validate(b.finalize())
    assert any("perfect recall" in msg for msg in issues)


def test_validate_bad_chance_probs():
    b = TreeBuilder(1)
    root = b.add_chance(None, None)
    b.add_terminal(root, "h", payoffs=[1.0], prob=0.7)
    b.add_terminal(root, "t", payoffs=[0.0], prob=0.5)
    issues = validate(b.finalize())
    assert any("sum to 1" in msg for msg in issues)


def test_behavioral_reach_t1_mixed(t1):
    pi = BehavioralStrategy(t1, 0, {0: [0.5, 0.5], 1: [0.4, 0.6]})
    rv = behavioral_reach(t1, pi)
    assert rv.as_dict() == {("L",): 0.5, ("R", "l"): 0.2, ("R", "r"): 0.3}
    assert rv.infoset_reach == {0: 1.0, 1: 0.5}


def test_behavioral_reach_t1_pure(t1):
    pi = BehavioralStrategy(t1, 0, {0: [1.0, 0.0], 1: [0.5, 0.5]})
    rv = behavioral_reach(t1, pi)
    assert rv.as_dict() == {("L",): 1.0, ("R", "l"): 0.0, ("R", "r"): 0.0}


def test_behavioral_reach_fig2_uniform(fig2):
    for p in fig2.players():
        rv = behavioral_reach(fig2, BehavioralStrategy.uniform(fig2, p))
        assert np.allclose(rv.terminal, 0.5)


def test_behavioral_reach_owner_mismatch(t1, fig2):
    pi = BehavioralStrategy.uniform(fig2, 0)
    with pytest.raises(TreeError):
        behavioral_reach(t1, pi)


def test_plan_reach_t1(t1):
    plans = {p.describe(t1): p for p in enumerate_plans(t1, 0)}
    assert set(plans) == {"plan(p0: I1=L)", "plan(p0: I1=R, I2=l)", "plan(p0: I1=R, I2=r)"}
    expect = {
        "plan(p0: I1=L)": [1, 0, 0],
        "plan(p0: I1=R, I2=l)": [0, 1, 0],
        "plan(p0: I1=R, I2=r)": [0, 0, 1],
    }
    for name, plan in plans.items():
        assert plan_reach(t1, plan).terminal.tolist() == expect[name]


def test_enumerate_plans_counts(t1, fig2, kuhn34):
    assert len(enumerate_plans(t1, 0)) == 3
    for p in fig2.players():
        assert len(enumerate_plans(fig2, p)) == 2
    # plan count from explicit enumeration matches the recursive branch product
    n = count_plans(kuhn34, 0)
    plans = enumerate_plans(kuhn34, 0, cap=10**5)
    assert len(plans) == n
    assert len(set(plans)) == n


def test_enumerate_plans_cap(kuhn34):
    with pytest.raises(PlanCapExceeded):
        enumerate_plans(kuhn34, 2, cap=100)


def test_canonicalize_t1(t1):
    a = canonicalize(t1, 0, {0: 0, 1: 0})  # (L, l)
    b = canonicalize(t1, 0, {0: 0, 1: 1})  # (L, r)
    assert a == b
    assert a.choices == ((0, 0),)
    c = canonicalize(t1, 0, {0: 1, 1: 0})  # (R, l)
    assert c.choices == ((0, 1), (1, 0))


def test_canonicalize_one_infoset_identity(fig2):
    iid = fig2.player_infosets(0)[0]
    plan = canonicalize(fig2, 0, {iid: 1})
    assert plan.choices == ((iid, 1),)


def test_plan_vs_deterministic_behavioral(t1, fig2, kuhn33):
    # the deterministic strategy induced by a plan has exactly the plan's reach
    for tree in (t1, fig2, kuhn33):
        for player in tree.players():
            for plan in enumerate_plans(tree, player, cap=10**4):
                pi = BehavioralStrategy.from_plan(tree, plan)
                assert np.array_equal(
                    behavioral_reach(tree, pi).terminal, plan_reach(tree, plan).terminal
                )


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_uniform_completion_sums_to_one(seed):
    rng = np.random.default_rng(seed)
    tree = random_game(2 + seed % 2, 1 + seed % 4, seed=seed)
    chance = tree.compiled().chance_term
    total = chance.copy()
    for p in tree.players():
        pi = BehavioralStrategy.random(tree, p, rng)
        total = total * behavioral_reach(tree, pi).terminal
    # product over the real profile is an exact outcome distribution
    assert abs(total.sum() - 1.0) < 1e-9
    # one player's reach with uniform completions also sums to 1
    for p in tree.players():
        onto = chance.copy()
        for q in tree.players():
            strat = (
                BehavioralStrategy.random(tree, q, rng)
                if q == p
                else BehavioralStrategy.uniform(tree, q)
            )
            onto = onto * behavioral_reach(tree, strat).terminal
        assert abs(onto.sum() - 1.0) < 1e-9


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_enumerate_plans_distinct_footprints(seed):
    # plans are exactly the distinct (reach support, on-path actions) pairs
    tree = random_game(2, 1 + seed % 3, seed=seed, chance_freq=0.3)
    for player in tree.players():
        plans = enumerate_plans(tree, player, cap=10**4)
        footprints = set()
        for plan in plans:
            support = tuple(plan_reach(tree, plan).terminal.astype(int))
            footprints.add((support, plan.choices))
        assert len(footprints) == len(plans)
        assert len(set(plans)) == len(plans)


def test_no_empty_support(kuhn33):
    for player in kuhn33.players():
        for plan in enumerate_plans(kuhn33, player, cap=10**4):
            assert plan_reach(kuhn33, plan).terminal.sum() > 0


def test_node_identity_by_action_sequence(t1):
    assert t1.history(0) == ()
    z = t1.node_by_history(("R", "l"))
    assert t1.is_terminal(z)
    assert t1.history(z) == ("R", "l")
    with pytest.raises(TreeError):
        t1.node_by_history(("Q",))
