import json

import numpy as np
import pytest

from ccelearn.efg import CHANCE, TreeError, validate
from ccelearn.games import (
    GameSpec,
    build_game,
    figure_two_game,
    format_game_spec,
    goofspiel,
    kuhn3,
    leduc3,
    matrix_game,
    parse_game_spec,
    random_game,
    shapley_efg,
    shapley_matrix_game,
)
from ccelearn.serialize import tree_to_jsonable


ALL_SPECS = ["K3-3", "K3-4", "L3-3", "G2-3-A", "G2-3-AL", "G3-2-DH", "SHAPLEY", "FIG2", "R2-3:seed=1"]


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_constructed_games_validate(spec):
    tree = build_game(spec)
    assert validate(tree) == []


@pytest.mark.parametrize("maker", [lambda: kuhn3(3), lambda: kuhn3(4), lambda: leduc3(3)])
def test_poker_zero_sum(maker):
    tree = maker()
    assert np.abs(tree.term_payoffs.sum(axis=1)).max() <= 1e-12


def test_kuhn_chance_outcomes():
    assert len(kuhn3(4).node_children[0]) == 24
    with pytest.raises(TreeError):
        kuhn3(2)


def _kuhn_betting_lines():
    # independent enumeration of the one-bet round sequences for 3 players
    lines = []

    def bet_lines(n_responders):
        return [
            "".join(seq)
            for seq in __import__("itertools").product("fc", repeat=n_responders)
        ]

    for prefix, responders in (("kkk", 0), ("kkb", 2), ("kb", 2), ("b", 2)):
        if responders == 0:
            lines.append(prefix)
        else:
            lines.extend(prefix + tail for tail in bet_lines(responders))
    return lines


def test_kuhn_terminal_count_oracle():
    lines = _kuhn_betting_lines()
    assert len(lines) == 13
    for r in (3, 4):
        tree = kuhn3(r)
        assert tree.num_terminals == r * (r - 1) * (r - 2) * len(lines)
    # stable across constructions
    assert kuhn3(4).num_terminals == kuhn3(4).num_terminals


def test_kuhn_showdown_payoffs():
    tree = kuhn3(3)
    # deal 3,2,1: everyone checks, player 0 wins the 3-chip pot of antes
    z = tree.node_by_history(("deal:3,2,1", "k", "k", "k"))
    assert tree.node_payoffs[z] == (2.0, -1.0, -1.0)
    # deal 1,2,3: player 0 bets, player 1 folds, player 2 calls and wins showdown
    z = tree.node_by_history(("deal:1,2,3", "b", "f", "c"))
    assert tree.node_payoffs[z] == (-2.0, -1.0, 3.0)
    # everyone folds to a bet by player 2: pot = 3 antes + 1 bet
    z = tree.node_by_history(("deal:1,2,3", "k", "k", "b", "f", "f"))
    assert tree.node_payoffs[z] == (-1.0, -1.0, 2.0)


def test_leduc_terminal_count_stable():
    assert leduc3(3).num_terminals == leduc3(3).num_terminals
    with pytest.raises(TreeError):
        leduc3(2)


def test_leduc_pot_split_on_shared_pair():
    tree = leduc3(3)
    # players 0 and 1 hold rank 1, community card is rank 1: both pair, no folds
    hist = ("deal:1,1,2", "k", "k", "k", "cc:1", "k", "k", "k")
    z = tree.node_by_history(hist)
    payoffs = tree.node_payoffs[z]
    # pot of 3 antes split between players 0 and 1
    assert payoffs == (0.5, 0.5, -1.0)


def test_leduc_fold_to_single_winner():
    tree = leduc3(3)
    # player 0 bets round 1, everyone folds: player 0 collects the antes
    z = tree.node_by_history(("deal:1,2,3", "b", "f", "f"))
    assert tree.node_payoffs[z] == (2.0, -1.0, -1.0)


def test_leduc_community_excludes_exhausted_rank():
    tree = leduc3(3)
    # all three copies of rank 1 dealt: community card cannot be rank 1
    node = tree.node_by_history(("deal:1,1,1", "k", "k", "k"))
    assert tree.node_player[node] == CHANCE
    labels = tree.node_actions[node]
    assert "cc:1" not in labels and set(labels) == {"cc:2", "cc:3"}
    probs = tree.node_chance_probs[node]
    assert np.allclose(probs, [0.5, 0.5])


def _goofspiel_replay(tree, rule, r, terminal):
    """Straight-line rules interpreter over the terminal's action history."""
    hist = tree.history(terminal)
    p = tree.num_players
    scores = [0.0] * p
    accum = 0
    discarded = 0.0
    i = 0
    while i < len(hist):
        label = hist[i]
        if label.startswith("p:"):
            prize = int(label[2:])
            i += 1
        else:
            prize = None  # forced last prize, no chance node
        if prize is None:
            seen = {int(lab[2:]) for lab in hist if lab.startswith("p:")}
            (prize,) = set(range(1, r + 1)) - seen if len(seen) == r - 1 else (None,)
        bids = [int(hist[i + j]) for j in range(p)]
        i += p
        uniq = sorted({b for b in bids if bids.count(b) == 1})
        tie_vals = {b for b in bids if bids.count(b) >= 2}
        winner = bids.index(max(uniq)) if uniq else None
        award = None
        if rule == "AL":
            award = winner if not tie_vals else None
        elif rule == "DH":
            award = None if r in tie_vals else winner
        else:
            award = winner
        if award is not None:
            scores[award] += prize + accum
            accum = 0
        elif rule == "A" and winner is None:
            accum += prize
        else:
            discarded += prize
    return scores, accum, discarded


@pytest.mark.parametrize("p,rule", [(2, "A"), (2, "AL"), (2, "DA"), (2, "DH"), (3, "A"), (3, "AL")])
def test_goofspiel_payoffs_match_replay_oracle(p, rule):
    tree = goofspiel(p, 3, rule)
    total_prizes = 6.0
    for z in tree.terminals:
        scores, accum, discarded = _goofspiel_replay(tree, rule, 3, int(z))
        assert tuple(scores) == tree.node_payoffs[z]
        # conservation: awarded + leftover accumulation + discarded = all prizes
        assert sum(scores) + accum + discarded == pytest.approx(total_prizes)


def test_goofspiel_higher_bid_wins():
    tree = goofspiel(2, 2, "A")
    # prize order 1 then 2; bids (2,1) -> player 0 takes prize 1; last round forced
    z = tree.node_by_history(("p:1", "2", "1", "1", "2"))
    assert tree.node_payoffs[z] == (1.0, 2.0)


def test_goofspiel_tie_rules_in_game():
    # one full play-through: prize 1 bids (3,3,2); prize 2 bids (1,1,1); prize 3 bids (2,2,3).
    # Round 1 has a non-top... top tie at 3=r, round 2 is all-equal, round 3 ties below the max.
    hist = ("p:1", "3", "3", "2", "p:2", "1", "1", "1", "2", "2", "3")
    expected = {
        "A": (0.0, 0.0, 6.0),  # prize1 to bidder of 2; prize2 accumulates onto prize3
        "DA": (0.0, 0.0, 4.0),  # prize2 discarded (all equal)
        "DH": (0.0, 0.0, 3.0),  # prize1 discarded (tie at top card), prize3 awarded
        "AL": (0.0, 0.0, 0.0),  # every round had a tie
    }
    for rule, payoffs in expected.items():
        tree = goofspiel(3, 3, rule)
        z = tree.node_by_history(hist)
        assert tree.node_payoffs[z] == payoffs, rule


def test_goofspiel_accumulate_carries_prizes():
    tree = goofspiel(2, 3, "A")
    # both bid 3 on prize 1 (tie, accumulate), then 1 beats 2's... bids (2,1) on prize 2
    z = tree.node_by_history(("p:1", "3", "3", "p:2", "2", "1", "1", "2"))
    payoffs = tree.node_payoffs[z]
    # player 0 wins prizes 1+2 accumulated, player 1 wins the forced prize 3
    assert payoffs == (3.0, 3.0)


def test_goofspiel_param_validation():
    for bad in [(4, 3, "A"), (2, 1, "A"), (2, 3, "XX")]:
        with pytest.raises(TreeError):
            goofspiel(*bad)


def test_shapley_efg_examples(shapley):
    assert shapley.node_payoffs[shapley.node_by_history(("0", "0", "1"))] == (1.0, 0.0)
    assert shapley.node_payoffs[shapley.node_by_history(("1", "2", "0"))] == (0.0, 0.0)
    # doubling: second cards equal, sum = 2 mod 3
    assert shapley.node_payoffs[shapley.node_by_history(("0", "1", "1"))] == (0.0, 2.0)


def test_shapley_efg_tree_shape(shapley):
    assert len(shapley.player_infosets(0)) == 4  # root + one per own first card
    assert len(shapley.player_infosets(1)) == 3
    second = [shapley.infosets[i] for i in shapley.player_infosets(0)[1:]]
    assert all(len(i.nodes) == 3 for i in second)  # the hidden reply is pooled


def test_matrix_game_fig2(fig2):
    payoffs = {
        ("L", "L"): (1.0, 1.0),
        ("L", "R"): (1.0, 0.0),
        ("R", "L"): (0.0, 1.0),
        ("R", "R"): (1.0, 1.0),
    }
    for hist, expect in payoffs.items():
        assert fig2.node_payoffs[fig2.node_by_history(hist)] == expect


def test_matrix_game_singleton():
    g = matrix_game([[[(0.5, 0.5)]]][0])
    assert g.num_terminals == 1


def test_matrix_game_shapley_rows():
    g = shapley_matrix_game()
    rows = [
        [(1, 0), (0, 1), (0, 0)],
        [(0, 0), (2, 0), (0, 1)],
        [(0, 1), (0, 0), (1, 0)],
    ]
    for i in range(3):
        for j in range(3):
            z = g.node_by_history((f"a{i}", f"a{j}"))
            assert g.node_payoffs[z] == tuple(map(float, rows[i][j]))


def test_matrix_game_ragged():
    with pytest.raises(TreeError):
        matrix_game([[(1, 1)], [(0, 1), (1, 0)]])


def test_random_game_determinism():
    a = tree_to_jsonable(random_game(2, 3, seed=7))
    b = tree_to_jsonable(random_game(2, 3, seed=7))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    c = tree_to_jsonable(random_game(2, 3, seed=8))
    assert json.dumps(a, sort_keys=True) != json.dumps(c, sort_keys=True)


def test_random_game_no_chance_when_freq_zero():
    tree = random_game(2, 4, seed=3, chance_freq=0.0)
    assert not np.any(tree.node_player == CHANCE)


def test_random_game_validates():
    assert validate(random_game(2, 3, seed=0)) == []
    with pytest.raises(TreeError):
        random_game(1, 3, seed=0)
    with pytest.raises(TreeError):
        random_game(2, 0, seed=0)


def test_game_spec_round_trip():
    for text in ["K3-4", "L3-3", "G2-4-DA", "R2-5:seed=7", "FIG2", "SHAPLEY", "SHAPLEY3"]:
        spec = parse_game_spec(text)
        assert format_game_spec(spec) == text
        assert parse_game_spec(format_game_spec(spec)) == spec


def test_game_spec_errors():
    with pytest.raises(TreeError):
        parse_game_spec("Q9")
    with pytest.raises(TreeError):
        parse_game_spec("R2-3:frob=1")
