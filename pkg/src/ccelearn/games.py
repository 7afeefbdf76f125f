"""Benchmark game constructors and the seeded random-game generator.

All constructors return validated :class:`~ccelearn.efg.GameTree` instances.
Simultaneous moves are encoded sequentially with information hiding, which
preserves strategic equivalence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .efg import GameTree, TreeBuilder, TreeError

GOOFSPIEL_RULES = ("A", "DA", "DH", "AL")


# ---------------------------------------------------------------------------
# poker helpers

def _betting_round(b, parent, action, prob, actors, stake, contrib, folded, key_fn, then):
    """One Kuhn-style betting round: checks until a single bet, then fold/call.

    ``actors`` act in seat order; once someone bets, the remaining players
    respond in seat order cycling past the bettor. ``then`` receives the
    attachment point for the subtree that follows the round.
    """

    def check_phase(parent, action, prob, i, hist):
        if i == len(actors):
            then(parent, action, prob, contrib, folded, hist)
            return
        actor = actors[i]
        node = b.add_decision(
            parent, action, player=actor, infoset_key=key_fn(actor, hist), actions=["k", "b"], prob=prob
        )
        check_phase(node, "k", None, i + 1, hist + "k")
        responders = actors[i + 1 :] + actors[:i]
        c2 = dict(contrib)
        c2[actor] += stake
        respond_phase(node, "b", None, responders, 0, c2, frozenset(folded), hist + "b")

    def respond_phase(parent, action, prob, responders, j, contrib2, folded2, hist):
        if j == len(responders):
            then(parent, action, prob, contrib2, folded2, hist)
            return
        actor = responders[j]
        node = b.add_decision(
            parent, action, player=actor, infoset_key=key_fn(actor, hist), actions=["f", "c"], prob=prob
        )
        respond_phase(node, "f", None, responders, j + 1, contrib2, folded2 | {actor}, hist + "f")
        c3 = dict(contrib2)
        c3[actor] += stake
        respond_phase(node, "c", None, responders, j + 1, c3, folded2, hist + "c")

    check_phase(parent, action, prob, 0, "")


def _split_pot(num_players, contrib, winners):
    pot = sum(contrib.values())
    share = pot / len(winners)
    return [
        (share if j in winners else 0.0) - contrib.get(j, 0.0) for j in range(num_players)
    ]


def kuhn3(r: int) -> GameTree:
    """Three-player Kuhn poker with ``r`` card ranks.

    Every player antes one chip and receives a distinct private card from the
    ``r``-rank deck (all ordered deals equiprobable). One betting round with a
    one-chip bet follows: the first player checks or bets, later players fold
    or call once a bet is outstanding, otherwise check or bet in turn. At the
    showdown the highest non-folded card takes the pot; payoffs are net chips.
    """
    if r < 3:
        raise TreeError("kuhn3 needs r >= 3")
    b = TreeBuilder(3)
    root = b.add_chance(None, None)
    deals = [
        (c1, c2, c3)
        for c1 in range(1, r + 1)
        for c2 in range(1, r + 1)
        for c3 in range(1, r + 1)
        if len({c1, c2, c3}) == 3
    ]
    p_deal = 1.0 / len(deals)
    for deal in deals:
        def key_fn(actor, hist, deal=deal):
            return f"c={deal[actor]}|h={hist}"

        def finish(parent, action, prob, contrib, folded, hist, deal=deal):
            active = [j for j in range(3) if j not in folded]
            if len(active) == 1:
                winners = active
            else:
                top = max(deal[j] for j in active)
                winners = [j for j in active if deal[j] == top]
            b.add_terminal(parent, action, payoffs=_split_pot(3, contrib, winners), prob=prob)

        _betting_round(
            b,
            root,
            "deal:" + ",".join(map(str, deal)),
            p_deal,
            [0, 1, 2],
            1,
            {0: 1, 1: 1, 2: 1},
            frozenset(),
            key_fn,
            finish,
        )
    return b.finalize()


def leduc3(r: int) -> GameTree:
    """Three-player Leduc hold'em with three suits and ``r`` ranks.

    Each player antes one chip and gets one private card; a first betting
    round (stake 2) is followed by a community card and a second round
    (stake 4), both rounds under the same one-bet rules as Kuhn poker. At the
    showdown a card paired with the community card beats any unpaired card;
    draws split the pot equally among the winners.

    Chance deals ranks directly with the multiplicities induced by the
    3-suit deck, which is strategically equivalent to dealing suited cards
    (suits are never observable and never affect payoffs).
    """
    if r < 3:
        raise TreeError("leduc3 needs r >= 3")
    b = TreeBuilder(3)
    root = b.add_chance(None, None)
    deck_size = 3 * r
    denom = deck_size * (deck_size - 1) * (deck_size - 2)

    def showdown(deal, community, active):
        paired = [j for j in active if deal[j] == community]
        if paired:
            return paired
        top = max(deal[j] for j in active)
        return [j for j in active if deal[j] == top]

    for deal in [(a, b_, c) for a in range(1, r + 1) for b_ in range(1, r + 1) for c in range(1, r + 1)]:
        used = {}
        ways = 1
        for c in deal:
            ways *= 3 - used.get(c, 0)
            used[c] = used.get(c, 0) + 1
        if ways <= 0:
            continue
        p_deal = ways / denom

        def key1(actor, hist, deal=deal):
            return f"c={deal[actor]}|r1={hist}"

        def after_round1(parent, action, prob, contrib, folded, hist1, deal=deal, used=dict(used)):
            active = [j for j in range(3) if j not in folded]
            if len(active) == 1:
                b.add_terminal(parent, action, payoffs=_split_pot(3, contrib, active), prob=prob)
                return
            cnode = b.add_chance(parent, action, prob=prob)
            remaining = deck_size - 3
            for cc in range(1, r + 1):
                left = 3 - used.get(cc, 0)
                if left == 0:
                    continue
                p_cc = left / remaining

                def key2(actor, hist, deal=deal, hist1=hist1, cc=cc):
                    return f"c={deal[actor]}|r1={hist1}|cc={cc}|r2={hist}"

                def finish(parent2, action2, prob2, contrib2, folded2, hist2, deal=deal, cc=cc):
                    active2 = [j for j in range(3) if j not in folded2]
                    winners = active2 if len(active2) == 1 else showdown(deal, cc, active2)
                    b.add_terminal(parent2, action2, payoffs=_split_pot(3, contrib2, winners), prob=prob2)

                _betting_round(
                    b, cnode, f"cc:{cc}", p_cc, active, 4, contrib, folded, key2, finish
                )

        _betting_round(
            b,
            root,
            "deal:" + ",".join(map(str, deal)),
            p_deal,
            [0, 1, 2],
            2,
            {0: 1, 1: 1, 2: 1},
            frozenset(),
            key1,
            after_round1,
        )
    return b.finalize()


def _resolve_bids(bids, rule, top_card):
    """Winner of a Goofspiel round, or None if the prize is not awarded.

    Returns (winner, accumulate) where accumulate only ever holds for rule A.
    """
    values = sorted(set(bids))
    tie_values = {v for v in values if bids.count(v) >= 2}
    unique = [v for v in values if bids.count(v) == 1]
    winner = bids.index(max(unique)) if unique else None
    if rule == "AL":
        if tie_values:
            return None, False
        return winner, False
    if rule == "DH" and top_card in tie_values:
        return None, False
    if winner is None:
        # all players bid the same card (the only no-winner case for p <= 3)
        return None, rule == "A"
    return winner, False


def goofspiel(p: int, r: int, rule: str, fixed_order: tuple[int, ...] | None = None) -> GameTree:
    """Goofspiel with ``p`` players, ``r`` ranks and a tie-breaking rule.

    A prize suit is shuffled by chance and revealed one card per round; each
    round the players simultaneously bid one card from their hands (modeled
    sequentially, bids hidden until the round resolves, all past rounds
    public). The highest unique bid takes the prize. Ties resolve per rule:
    A accumulates the prize onto the next round when all bids are equal, DA
    discards it in that case, DH discards whenever the tie is at the highest
    card value ``r``, and AL discards on any tie. Utilities are the summed
    point values of the prizes won (card ``i`` is worth ``i`` points).

    ``fixed_order`` replaces the chance shuffle with a deterministic prize
    order, a non-standard reduction for quick experiments.
    """
    if p not in (2, 3):
        raise TreeError("goofspiel supports 2 or 3 players")
    if r < 2:
        raise TreeError("goofspiel needs r >= 2")
    if rule not in GOOFSPIEL_RULES:
        raise TreeError(f"unknown tie rule {rule!r}")
    if fixed_order is not None and sorted(fixed_order) != list(range(1, r + 1)):
        raise TreeError("fixed_order must be a permutation of 1..r")
    b = TreeBuilder(p)

    def play_round(parent, action, prob, prizes_left, hands, scores, accum, public):
        if fixed_order is not None:
            prize = fixed_order[len(public)]
            bid_phase(parent, action, prob, prize, prizes_left - {prize}, hands, scores, accum, public)
        elif len(prizes_left) == 1:
            (prize,) = prizes_left
            bid_phase(parent, action, prob, prize, frozenset(), hands, scores, accum, public)
        else:
            cnode = b.add_chance(parent, action, prob=prob)
            q = 1.0 / len(prizes_left)
            for prize in sorted(prizes_left):
                bid_phase(
                    cnode, f"p:{prize}", q, prize, prizes_left - {prize}, hands, scores, accum, public
                )

    def bid_phase(parent, action, prob, prize, prizes_left, hands, scores, accum, public, bids=()):
        j = len(bids)
        if j < p:
            key = f"prize={prize}|past={public}"
            node = b.add_decision(
                parent, action, player=j, infoset_key=key, actions=[str(c) for c in sorted(hands[j])], prob=prob
            )
            for c in sorted(hands[j]):
                bid_phase(node, str(c), None, prize, prizes_left, hands, scores, accum, public, bids + (c,))
            return
        winner, accumulate = _resolve_bids(list(bids), rule, r)
        scores2 = list(scores)
        if winner is not None:
            scores2[winner] += prize + accum
            accum2 = 0
        elif accumulate:
            accum2 = accum + prize
        else:
            accum2 = 0  # discard (rule A never reaches this branch)
        hands2 = tuple(h - {bids[i]} for i, h in enumerate(hands))
        public2 = public + ((prize, bids),)
        if not hands2[0]:
            b.add_terminal(parent, action, payoffs=[float(s) for s in scores2], prob=prob)
        else:
            play_round(parent, action, prob, prizes_left, hands2, scores2, accum2, public2)

    full = frozenset(range(1, r + 1))
    play_round(None, None, None, full, tuple(full for _ in range(p)), [0.0] * p, 0, ())
    return b.finalize()


def shapley_efg() -> GameTree:
    """Sequential card game cycling like the Shapley matrix game.

    Player 1 plays a card from {0,1,2} face up, player 2 answers with a
    hidden card, player 1 plays a second card. The card sum mod 3 fixes the
    base utility (0 -> (0,0), 1 -> (1,0), 2 -> (0,1)); when player 2's card
    equals player 1's second card both utilities are doubled.
    """
    b = TreeBuilder(2)
    cards = ["0", "1", "2"]
    root = b.add_decision(None, None, player=0, infoset_key="first", actions=cards)
    for a in range(3):
        n2 = b.add_decision(root, cards[a], player=1, infoset_key=f"p1={a}", actions=cards)
        for c2 in range(3):
            n3 = b.add_decision(n2, cards[c2], player=0, infoset_key=f"second|own={a}", actions=cards)
            for c3 in range(3):
                s = (a + c2 + c3) % 3
                base = {0: (0.0, 0.0), 1: (1.0, 0.0), 2: (0.0, 1.0)}[s]
                mult = 2.0 if c2 == c3 else 1.0
                b.add_terminal(n3, cards[c3], payoffs=[base[0] * mult, base[1] * mult])
    return b.finalize()


def matrix_game(payoffs, labels: list[list[str]] | None = None) -> GameTree:
    """Simultaneous-move game from a payoff tensor of shape dims + (players,).

    Encoded sequentially: player 0 moves first and each later player has a
    single infoset hiding everything played so far.
    """
    try:
        tensor = np.asarray(payoffs, dtype=np.float64)
    except ValueError as exc:
        raise TreeError(f"ragged payoff tensor: {exc}") from None
    if tensor.ndim < 2 or tensor.shape[-1] != tensor.ndim - 1:
        raise TreeError("payoff tensor must have shape dims + (players,)")
    p = tensor.ndim - 1
    dims = tensor.shape[:-1]
    if labels is None:
        labels = [[f"a{i}" for i in range(dims[j])] for j in range(p)]
    b = TreeBuilder(p)

    def grow(parent, action, idx):
        j = len(idx)
        if j == p:
            b.add_terminal(parent, action, payoffs=list(tensor[idx]))
            return
        node = b.add_decision(parent, action, player=j, infoset_key=f"move{j}", actions=labels[j])
        for a in range(dims[j]):
            grow(node, labels[j][a], idx + (a,))

    grow(None, None, ())
    return b.finalize()


def figure_two_game() -> GameTree:
    """2x2 game whose product of average no-regret strategies is not a CCE."""
    return matrix_game(
        [[(1, 1), (1, 0)], [(0, 1), (1, 1)]],
        labels=[["L", "R"], ["L", "R"]],
    )


def shapley_matrix_game() -> GameTree:
    """3x3 general-sum Shapley variant that cycles under fictitious-play-like dynamics."""
    return matrix_game(
        [
            [(1, 0), (0, 1), (0, 0)],
            [(0, 0), (2, 0), (0, 1)],
            [(0, 1), (0, 0), (1, 0)],
        ]
    )


def random_game(
    p: int,
    d: int,
    seed: int,
    branching: int = 2,
    chance_freq: float = 0.2,
    payoff_range: tuple[float, float] = (0.0, 1.0),
) -> GameTree:
    """Seeded random perfect-recall EFG of uniform depth ``d``.

    Interior nodes are chance nodes with probability ``chance_freq`` (uniform
    outcomes), otherwise decision nodes of a uniformly drawn player. Nodes of
    one player at equal depth with identical own-action histories share an
    infoset. Terminal payoffs are i.i.d. uniform in ``payoff_range`` per
    player. The same arguments always produce the identical tree.
    """
    if p < 2 or d < 1 or branching < 2:
        raise TreeError("random_game needs p >= 2, d >= 1, branching >= 2")
    lo, hi = payoff_range
    if not hi >= lo:
        raise TreeError("empty payoff range")
    rng = np.random.default_rng(seed)
    b = TreeBuilder(p)
    probs = [1.0 / branching] * (branching - 1)
    probs.append(1.0 - sum(probs))

    def grow(parent, action, prob, depth, own_hist):
        if depth == d:
            b.add_terminal(parent, action, payoffs=rng.uniform(lo, hi, size=p), prob=prob)
            return
        if rng.random() < chance_freq:
            node = b.add_chance(parent, action, prob=prob)
            for a in range(branching):
                grow(node, f"o{a}", probs[a], depth + 1, own_hist)
            return
        player = int(rng.integers(p))
        key = f"d{depth}|{own_hist[player]}"
        node = b.add_decision(
            parent, action, player=player, infoset_key=key,
            actions=[f"a{a}" for a in range(branching)], prob=prob,
        )
        for a in range(branching):
            h2 = list(own_hist)
            h2[player] = f"{own_hist[player]}/{key}:{a}"
            grow(node, f"a{a}", None, depth + 1, tuple(h2))

    grow(None, None, None, 0, tuple("" for _ in range(p)))
    return b.finalize()


# ---------------------------------------------------------------------------
# game spec grammar

@dataclass(frozen=True)
class GameSpec:
    """Parsed benchmark-instance identifier (see :func:`parse_game_spec`)."""

    family: str
    params: dict = field(default_factory=dict)

    def __str__(self) -> str:
        return format_game_spec(self)


_RANDOM_KEYS = {"seed": int, "branching": int, "chance": float, "lo": float, "hi": float}


def parse_game_spec(text: str) -> GameSpec:
    """Parse instance strings like ``K3-4``, ``G2-4-DA``, ``L3-3``, ``R2-5:seed=7``.

    Also accepts ``FIG2``, ``SHAPLEY`` (the sequential card variant),
    ``SHAPLEY3`` (the 3x3 matrix variant) and ``file:<path>`` for persisted
    instances.
    """
    s = text.strip()
    if s.lower().startswith("file:"):
        return GameSpec("file", {"path": s[5:]})
    u = s.upper()
    if u == "FIG2":
        return GameSpec("fig2")
    if u == "SHAPLEY":
        return GameSpec("shapley_efg")
    if u == "SHAPLEY3":
        return GameSpec("shapley3")
    m = re.fullmatch(r"K3-(\d+)", u)
    if m:
        return GameSpec("kuhn3", {"r": int(m.group(1))})
    m = re.fullmatch(r"L3-(\d+)", u)
    if m:
        return GameSpec("leduc3", {"r": int(m.group(1))})
    m = re.fullmatch(r"G(\d+)-(\d+)-(A|DA|DH|AL)", u)
    if m:
        return GameSpec("goofspiel", {"p": int(m.group(1)), "r": int(m.group(2)), "rule": m.group(3)})
    m = re.fullmatch(r"R(\d+)-(\d+)(?::(.*))?", u, flags=re.IGNORECASE)
    if m:
        params = {"p": int(m.group(1)), "d": int(m.group(2)), "seed": 0}
        if m.group(3):
            for item in m.group(3).split(","):
                k, _, v = item.partition("=")
                k = k.strip().lower()
                if k not in _RANDOM_KEYS:
                    raise TreeError(f"unknown random-game parameter {k!r}")
                params[k] = _RANDOM_KEYS[k](v)
        return GameSpec("random", params)
    raise TreeError(f"unparsable game spec {text!r}")


def format_game_spec(spec: GameSpec) -> str:
    f, q = spec.family, spec.params
    if f == "kuhn3":
        return f"K3-{q['r']}"
    if f == "leduc3":
        return f"L3-{q['r']}"
    if f == "goofspiel":
        return f"G{q['p']}-{q['r']}-{q['rule']}"
    if f == "random":
        extras = ",".join(
            f"{k}={q[k]}" for k in ("seed", "branching", "chance", "lo", "hi") if k in q
        )
        return f"R{q['p']}-{q['d']}" + (f":{extras}" if extras else "")
    if f == "fig2":
        return "FIG2"
    if f == "shapley_efg":
        return "SHAPLEY"
    if f == "shapley3":
        return "SHAPLEY3"
    if f == "file":
        return "file:" + q["path"]
    raise TreeError(f"unknown family {f!r}")


def build_game(spec: GameSpec | str) -> GameTree:
    """Construct the game named by a :class:`GameSpec` or spec string."""
    if isinstance(spec, str):
        spec = parse_game_spec(spec)
    f, q = spec.family, spec.params
    if f == "kuhn3":
        return kuhn3(q["r"])
    if f == "leduc3":
        return leduc3(q["r"])
    if f == "goofspiel":
        return goofspiel(q["p"], q["r"], q["rule"])
    if f == "shapley_efg":
        return shapley_efg()
    if f == "fig2":
        return figure_two_game()
    if f == "shapley3":
        return shapley_matrix_game()
    if f == "random":
        return random_game(
            q["p"],
            q["d"],
            q.get("seed", 0),
            branching=q.get("branching", 2),
            chance_freq=q.get("chance", 0.2),
            payoff_range=(q.get("lo", 0.0), q.get("hi", 1.0)),
        )
    if f == "file":
        from .serialize import load_game

        return load_game(q["path"])
    raise TreeError(f"unknown family {f!r}")
