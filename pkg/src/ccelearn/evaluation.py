"""Exact equilibrium-gap evaluation, payoff range, social welfare, oracles.

The deviation incentive of a joint distribution is measured against reduced
plans: the best response is a dynamic program over the deviating player's
own-infoset forest (sound under perfect recall), and a brute-force
enumeration twin provides reference semantics on small games.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .efg import (
    CHANCE,
    TERMINAL,
    BehavioralStrategy,
    GameTree,
    NormalFormPlan,
    RealizationVector,
    TreeError,
    behavioral_reach,
    enumerate_plans,
)
from .joint import JointDistribution, NormalFormStrategy


@dataclass(frozen=True)
class GapReport:
    """Deviation incentives of an evaluated joint distribution."""

    deviation_values: tuple[float, ...]
    onpath_values: tuple[float, ...]
    eps_per_player: tuple[float, ...]
    epsilon: float
    delta: float
    alpha: float
    sw: float
    degenerate: bool = False  # payoff range is zero

    def to_json(self) -> str:
        return json.dumps(
            {
                "deviation_values": list(self.deviation_values),
                "onpath_values": list(self.onpath_values),
                "eps_per_player": list(self.eps_per_player),
                "epsilon": self.epsilon,
                "delta": self.delta,
                "alpha": self.alpha,
                "sw": self.sw,
                "degenerate": self.degenerate,
            }
        )


def payoff_range(tree: GameTree) -> float:
    """Largest per-player payoff spread over the terminals."""
    if tree.num_terminals == 0:
        raise TreeError("game has no terminals")
    u = tree.term_payoffs
    return float((u.max(axis=0) - u.min(axis=0)).max())


def _report(tree, dev, onpath) -> GapReport:
    dev = np.asarray(dev, dtype=np.float64)
    onpath = np.asarray(onpath, dtype=np.float64)
    eps = dev - onpath
    epsilon = float(eps.max())
    delta = payoff_range(tree)
    degenerate = delta <= 0.0
    alpha = 0.0 if degenerate else epsilon / delta
    return GapReport(
        deviation_values=tuple(map(float, dev)),
        onpath_values=tuple(map(float, onpath)),
        eps_per_player=tuple(map(float, eps)),
        epsilon=epsilon,
        delta=delta,
        alpha=alpha,
        sw=float(onpath.sum()),
        degenerate=degenerate,
    )


def opponent_reach(tree: GameTree, player: int, dist: JointDistribution) -> RealizationVector:
    """Probability that chance and everyone but ``player`` allow each terminal."""
    tree._check_player(player)
    ct = tree.compiled()
    out = np.zeros(ct.n_terms)
    total = dist.total
    if total <= 0:
        raise TreeError("empty joint distribution")
    for key, w in dist.items_raw():
        prod = np.ones(ct.n_terms, dtype=bool)
        for j in tree.players():
            if j != player:
                prod &= dist.player_mask(j, key[j])
        out += (w / total) * prod
    return RealizationVector(tree, player, out * ct.chance_term)


def best_response(tree: GameTree, player: int, opp_reach) -> tuple[float, NormalFormPlan]:
    """Best deviation plan against a fixed opponent/chance reach over terminals.

    ``opp_reach`` may be a RealizationVector or a plain array that already
    includes chance. Ties break toward the lowest action index.
    """
    tree._check_player(player)
    w = opp_reach.terminal if isinstance(opp_reach, RealizationVector) else np.asarray(opp_reach, float)
    if w.shape != (tree.num_terminals,):
        raise TreeError("opponent reach must have one entry per terminal")
    weighted = w * tree.term_payoffs[:, player]
    seq = tree.compiled().seq[player]
    value = np.zeros(seq.n_inf)
    chosen = np.zeros(seq.n_inf, dtype=np.int64)
    for li in range(seq.n_inf - 1, -1, -1):
        bv, bc = -np.inf, 0
        for a in range(seq.n_actions[li]):
            ia = seq.act_start[li] + a
            v = weighted[seq.direct_term[seq.direct_start[ia] : seq.direct_start[ia + 1]]].sum()
            v += value[seq.child_loc[seq.child_start[ia] : seq.child_start[ia + 1]]].sum()
            if v > bv:
                bv, bc = v, a
        value[li], chosen[li] = bv, bc
    total = float(weighted[seq.free_terms].sum() + value[seq.root_locs].sum())
    choices = {}
    stack = [int(r) for r in seq.root_locs]
    while stack:
        li = stack.pop()
        a = int(chosen[li])
        choices[seq.topo_global[li]] = a
        ia = seq.act_start[li] + a
        stack.extend(int(c) for c in seq.child_loc[seq.child_start[ia] : seq.child_start[ia + 1]])
    return total, NormalFormPlan(player, tuple(sorted(choices.items())))


def _onpath_values(tree: GameTree, dist: JointDistribution) -> np.ndarray:
    ct = tree.compiled()
    out = np.zeros(ct.n_players)
    for key, w in dist.items_raw():
        prod = np.ones(ct.n_terms, dtype=bool)
        for j in tree.players():
            prod &= dist.player_mask(j, key[j])
        out += (w / dist.total) * ((prod * ct.chance_term) @ ct.term_payoff)
    return out


def cce_gap(tree: GameTree, dist: JointDistribution) -> GapReport:
    """Exact deviation incentives of a joint plan distribution.

    Per player, the gap is the best-response value against the distribution's
    marginal opponent reach minus the on-path expected utility.
    """
    dist.validate()
    dev = np.zeros(tree.num_players)
    for i in tree.players():
        dev[i], _ = best_response(tree, i, opponent_reach(tree, i, dist))
    return _report(tree, dev, _onpath_values(tree, dist))


def product_gap(tree: GameTree, strategies: Sequence[BehavioralStrategy]) -> GapReport:
    """Gap of the product distribution of behavioral strategies, unmaterialized."""
    if len(strategies) != tree.num_players:
        raise TreeError("need one strategy per player")
    ct = tree.compiled()
    reach = np.stack([behavioral_reach(tree, s).terminal for s in strategies])
    dev = np.zeros(tree.num_players)
    for i in tree.players():
        opp = ct.chance_term.copy()
        for j in tree.players():
            if j != i:
                opp *= reach[j]
        dev[i], _ = best_response(tree, i, opp)
    full = ct.chance_term * reach.prod(axis=0)
    onpath = full @ ct.term_payoff
    return _report(tree, dev, onpath)


def social_welfare(tree: GameTree, dist: JointDistribution) -> float:
    """Sum of all players' expected utilities under the distribution."""
    return float(_onpath_values(tree, dist).sum())


def sw_upper_bound(tree: GameTree) -> float:
    """Upper bound on any joint plan's chance-expected welfare.

    A coordinated-team dynamic program that relaxes information constraints:
    every decision node independently picks the welfare-maximizing action.
    Any CCE's welfare is a convex combination of joint-plan welfares, so it
    never exceeds this value.
    """
    welfare = tree.term_payoffs.sum(axis=1)
    value = np.zeros(tree.num_nodes)
    for h in range(tree.num_nodes - 1, -1, -1):
        pl = tree.node_player[h]
        if pl == TERMINAL:
            value[h] = welfare[tree.term_index[h]]
        elif pl == CHANCE:
            value[h] = sum(
                q * value[c] for q, c in zip(tree.node_chance_probs[h], tree.node_children[h])
            )
        else:
            value[h] = max(value[c] for c in tree.node_children[h])
    return float(value[tree.ROOT])


def profile_utilities(tree: GameTree, plans: Sequence[NormalFormPlan]) -> np.ndarray:
    """Chance-expected utility vector of a joint reduced plan, by direct traversal."""
    if len(plans) != tree.num_players:
        raise TreeError("need one plan per player")
    by_player = {p.player: p for p in plans}
    if sorted(by_player) != list(tree.players()):
        raise TreeError("plans must cover every player exactly once")

    def walk(h: int) -> np.ndarray:
        pl = tree.node_player[h]
        if pl == TERMINAL:
            return tree.term_payoffs[tree.term_index[h]]
        if pl == CHANCE:
            out = np.zeros(tree.num_players)
            for q, c in zip(tree.node_chance_probs[h], tree.node_children[h]):
                out += q * walk(c)
            return out
        a = by_player[pl].action_at(int(tree.node_infoset[h]))
        if a is None:
            raise TreeError(f"plan of player {pl} undefined at reached infoset {tree.node_infoset[h]}")
        return walk(tree.node_children[h][a])

    return walk(tree.ROOT)


def plan_sequence_regret(tree: GameTree, player: int, profiles: Sequence[Sequence[NormalFormPlan]],
                         cap: int = 10**6) -> float:
    """Cumulative sampled external regret of a stored sequence of joint plans.

    The max over deviation plans of the summed utility difference against the
    realized opponents' plans, by full enumeration.
    """
    realized = sum(profile_utilities(tree, prof)[player] for prof in profiles)
    best = -np.inf
    for dev in enumerate_plans(tree, player, cap):
        total = 0.0
        for prof in profiles:
            swapped = [dev if q.player == player else q for q in prof]
            total += profile_utilities(tree, swapped)[player]
        best = max(best, total)
    return float(best - realized)


def brute_force_cce_gap(tree: GameTree, dist: JointDistribution, cap: int = 10**5) -> GapReport:
    """Reference gap semantics by full deviation enumeration and traversal."""
    dist.validate()
    profiles = [(tuple(plans), w) for plans, w in dist.normalized_items()]
    onpath = np.zeros(tree.num_players)
    for plans, w in profiles:
        onpath += w * profile_utilities(tree, plans)
    dev = np.zeros(tree.num_players)
    for i in tree.players():
        best = -np.inf
        for candidate in enumerate_plans(tree, i, cap):
            total = 0.0
            for plans, w in profiles:
                swapped = [candidate if q.player == i else q for q in plans]
                total += w * profile_utilities(tree, swapped)[i]
            best = max(best, total)
        dev[i] = best
    return _report(tree, dev, onpath)


def realization_equivalence_check(
    tree: GameTree,
    strategy: BehavioralStrategy,
    nf_strategy: NormalFormStrategy,
    tol: float = 1e-9,
) -> bool:
    """True iff the plan mixture induces the strategy's terminal reach everywhere."""
    if strategy.player != nf_strategy.player:
        raise TreeError("owner mismatch")
    behavioral = behavioral_reach(tree, strategy).terminal
    mixed = nf_strategy.realization().terminal
    return bool(np.abs(behavioral - mixed).max() <= tol)
