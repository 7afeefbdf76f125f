import pytest

from ccelearn.efg import TreeBuilder


def build_t1(payoffs=(1.0, 2.0, 3.0)):
    """Single-player tree: I1 {L -> z1, R -> I2}, I2 {l -> z2, r -> z3}."""
    b = TreeBuilder(1)
    root = b.add_decision(None, None, player=0, infoset_key="I1", actions=["L", "R"])
    b.add_terminal(root, "L", payoffs=[payoffs[0]])
    n2 = b.add_decision(root, "R", player=0, infoset_key="I2", actions=["l", "r"])
    b.add_terminal(n2, "l", payoffs=[payoffs[1]])
    b.add_terminal(n2, "r", payoffs=[payoffs[2]])
    return b.finalize()


@pytest.fixture(scope="session")
def t1():
    return build_t1()


@pytest.fixture(scope="session")
def fig2():
    from ccelearn.games import figure_two_game

    return figure_two_game()


@pytest.fixture(scope="session")
def shapley():
    from ccelearn.games import shapley_efg

    return shapley_efg()


@pytest.fixture(scope="session")
def kuhn33():
    from ccelearn.games import kuhn3

    return kuhn3(3)


@pytest.fixture(scope="session")
def kuhn34():
    from ccelearn.games import kuhn3

    return kuhn3(4)


def random_behavioral(tree, player, rng):
    from ccelearn.efg import BehavioralStrategy

    return BehavioralStrategy.random(tree, player, rng)


def uniform_profile(tree):
    from ccelearn.efg import BehavioralStrategy

    return [BehavioralStrategy.uniform(tree, p) for p in tree.players()]
