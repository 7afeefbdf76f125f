"""Regret matching, per-infoset regret accounting, vanilla CFR, CFR-S updates."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from . import _kernels
from .efg import BehavioralStrategy, GameTree, NormalFormPlan, TreeError


def regret_matching(cum_regrets) -> np.ndarray:
    """Distribution proportional to positive cumulative regrets, else uniform."""
    r = np.asarray(cum_regrets, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("need a non-empty 1-d regret vector")
    pos = np.clip(r, 0.0, None)
    tot = pos.sum()
    if tot > 0.0:
        return pos / tot
    return np.full(r.size, 1.0 / r.size)


class RegretTable:
    """Cumulative per-infoset regrets for one player, plus an update counter."""

    def __init__(self, tree: GameTree, player: int):
        tree._check_player(player)
        self.tree = tree
        self.player = player
        self.cum = {
            iid: np.zeros(tree.infosets[iid].num_actions) for iid in tree.player_infosets(player)
        }
        self.iterations = 0

    def strategy(self) -> BehavioralStrategy:
        """Regret-matching strategy induced by the current table."""
        return BehavioralStrategy(
            self.tree, self.player, {iid: regret_matching(r) for iid, r in self.cum.items()}
        )

    def positive_part_sum(self) -> float:
        """Sum over infosets of the positive part of the maximum regret."""
        return float(sum(max(r.max(), 0.0) for r in self.cum.values())) if self.cum else 0.0

    def to_jsonable(self) -> dict:
        return {
            "player": self.player,
            "iterations": self.iterations,
            "cum": {str(i): list(map(float, r)) for i, r in self.cum.items()},
        }


class AverageState:
    """Reach-weighted running sums of one player's behavioral strategies."""

    def __init__(self, tree: GameTree, player: int, sums: dict[int, np.ndarray], weights: dict[int, float]):
        self.tree = tree
        self.player = player
        self.sums = sums
        self.weights = weights


def average_behavioral(state: AverageState) -> BehavioralStrategy:
    """Normalize an :class:`AverageState`; uniform at never-reached infosets."""
    table = {}
    for iid in state.tree.player_infosets(state.player):
        s = state.sums[iid]
        w = s.sum()
        if w > 0.0:
            table[iid] = s / w
        else:
            table[iid] = np.full(len(s), 1.0 / len(s))
    return BehavioralStrategy(state.tree, state.player, table)


class CfrSolver:
    """Vanilla CFR with simultaneous updates and exact chance expectation.

    Strategies, regrets and strategy averages live in flat (infoset, action)
    arrays; :meth:`iterate` plays the current profile through the whole tree
    once per call. After ``iterate`` returns, ``term_reach`` and ``root_values``
    describe the profile that was just played.
    """

    def __init__(self, tree: GameTree):
        self.tree = tree
        ct = tree.compiled()
        self.ct = ct
        self.t = 0
        self.regret = np.zeros(ct.n_iacts)
        self.avg = np.zeros(ct.n_iacts)
        self.strat = np.zeros(ct.n_iacts)
        _kernels.regret_match_all(self.regret, self.strat, ct.inf_start)
        self._reach = np.zeros((ct.n_nodes, ct.n_players))
        self._values = np.zeros((ct.n_nodes, ct.n_players))
        self.term_reach = np.zeros((ct.n_players, ct.n_terms))
        self.root_values = np.zeros(ct.n_players)

    def iterate(self) -> None:
        ct = self.ct
        _kernels.cfr_iter(
            ct.node_player,
            ct.node_infoset,
            ct.nes,
            ct.edge_child,
            ct.edge_iact,
            ct.edge_prob,
            ct.chance_node,
            ct.node_term,
            ct.term_payoff,
            ct.inf_start,
            ct.n_players,
            self.regret,
            self.avg,
            self.strat,
            self._reach,
            self._values,
            self.term_reach,
            self.root_values,
        )
        self.t += 1

    def current_strategy(self, player: int) -> BehavioralStrategy:
        ct = self.ct
        return BehavioralStrategy(
            self.tree,
            player,
            {
                iid: self.strat[ct.inf_start[iid] : ct.inf_start[iid + 1]].copy()
                for iid in self.tree.player_infosets(player)
            },
        )

    def regret_table(self, player: int) -> RegretTable:
        ct = self.ct
        table = RegretTable(self.tree, player)
        for iid in self.tree.player_infosets(player):
            table.cum[iid] = self.regret[ct.inf_start[iid] : ct.inf_start[iid + 1]].copy()
        table.iterations = self.t
        return table

    def average_state(self, player: int) -> AverageState:
        ct = self.ct
        sums = {
            iid: self.avg[ct.inf_start[iid] : ct.inf_start[iid + 1]].copy()
            for iid in self.tree.player_infosets(player)
        }
        return AverageState(self.tree, player, sums, {i: float(s.sum()) for i, s in sums.items()})

    def average_strategy(self, player: int) -> BehavioralStrategy:
        return average_behavioral(self.average_state(player))


def cfr_iteration(solver: CfrSolver) -> dict[int, BehavioralStrategy]:
    """One full CFR iteration; returns the next profile per player."""
    solver.iterate()
    return {p: solver.current_strategy(p) for p in solver.tree.players()}


# ---------------------------------------------------------------------------
# CFR-S pieces

def sample_assignment(tree: GameTree, strategy: BehavioralStrategy, rng: np.random.Generator) -> dict[int, int]:
    """Sample one action per infoset of the strategy's owner."""
    return {
        iid: int(rng.choice(len(probs), p=probs)) for iid, probs in strategy.table.items()
    }


def sampled_plan(tree: GameTree, strategy: BehavioralStrategy, rng: np.random.Generator) -> NormalFormPlan:
    """Draw a reduced plan by sampling at each own-reachable infoset.

    The induced plan probability is the product of the strategy's
    probabilities over the sampled (reachable) infosets.
    """
    seq = tree.compiled().seq[strategy.player]
    choices: dict[int, int] = {}
    stack = list(seq.root_infosets)
    while stack:
        iid = stack.pop()
        probs = strategy.prob(iid)
        a = int(rng.choice(len(probs), p=probs))
        choices[iid] = a
        stack.extend(seq.children_of(iid, a))
    return NormalFormPlan(strategy.player, tuple(sorted(choices.items())))


def cfr_s_update(
    tree: GameTree,
    player: int,
    assignment: Mapping[int, int],
    opponent_plans: Mapping[int, NormalFormPlan],
    table: RegretTable,
) -> None:
    """Laminar regret update for one sampled joint plan (reference path).

    ``assignment`` gives the player's sampled action at every own infoset
    (deviation branches need the actions below them); opponents contribute
    through the realized utilities of their reduced plans, with chance kept
    in expectation. Regrets accumulate the difference between each action's
    parameterized utility and the sampled action's.
    """
    if table.player != player:
        raise TreeError("table owner mismatch")
    ct = tree.compiled()
    seq = ct.seq[player]
    allow = np.ones(ct.n_terms, dtype=bool)
    for j, plan in opponent_plans.items():
        if j == player:
            raise TreeError("opponent plan for the updating player")
        allow &= ct.seq[j].plan_terminal_mask(plan)
    util = ct.chance_term * allow * ct.term_payoff[:, player]

    value: dict[int, float] = {}  # infoset -> utility of following the assignment
    hat: dict[int, np.ndarray] = {}
    for iid in reversed(seq.topo_global):
        ifs = tree.infosets[iid]
        hats = np.zeros(ifs.num_actions)
        for a in range(ifs.num_actions):
            li = seq.loc_of_global[iid]
            ia = seq.act_start[li] + a
            direct = seq.direct_term[seq.direct_start[ia] : seq.direct_start[ia + 1]]
            hats[a] = util[direct].sum() + sum(value[c] for c in seq.children_of(iid, a))
        hat[iid] = hats
        value[iid] = float(hats[assignment[iid]])
    for iid, hats in hat.items():
        table.cum[iid] += hats - hats[assignment[iid]]
    table.iterations += 1


class CfrSSolver:
    """Sampling-based CFR over sampled normal-form plans (kernel-backed).

    Each iteration every player draws a plan from her current profile, the
    realized (chance-expected) utilities drive laminar regret updates, and
    the sampled joint reduced plan is tallied into the empirical frequency of
    play. Randomness comes from one named PCG64 stream per player, spawned
    from the run seed, so runs are bit-reproducible.
    """

    def __init__(self, tree: GameTree, seed: int):
        self.tree = tree
        ct = tree.compiled()
        self.ct = ct
        self.seed = seed
        streams = np.random.SeedSequence(seed).spawn(ct.n_players)
        self._rngs = [np.random.Generator(np.random.PCG64(s)) for s in streams]
        self.t = 0
        self.regret = np.zeros(ct.n_iacts)
        self.strat = np.zeros(ct.n_iacts)
        _kernels.regret_match_all(self.regret, self.strat, ct.inf_start)
        self.opp_acc = np.zeros((ct.n_players, ct.n_terms))
        self.onpath_acc = np.zeros(ct.n_players)
        self.tally: dict[tuple[bytes, ...], int] = {}
        self._samp = np.zeros(ct.n_infosets, dtype=np.int16)
        self._forb = np.zeros(ct.n_nodes, dtype=np.int32)
        self._sub = np.zeros(ct.n_nodes)
        self._iact_acc = np.zeros(ct.n_iacts)
        # column ranges of each player's infosets in the global table
        self._cols = [np.array(tree.player_infosets(p), dtype=np.int64) for p in tree.players()]

    def run_block(self, iters: int, update: bool = True) -> None:
        """Advance ``iters`` iterations, accumulating metrics and the tally."""
        if iters <= 0:
            return
        ct = self.ct
        uniforms = np.empty((iters, ct.n_infosets))
        for p in self.tree.players():
            cols = self._cols[p]
            if len(cols):
                uniforms[:, cols] = self._rngs[p].random((iters, len(cols)))
        sampled = np.empty((iters, ct.n_infosets), dtype=np.int16)
        _kernels.cfr_s_block(
            ct.node_player,
            ct.node_infoset,
            ct.nes,
            ct.edge_child,
            ct.edge_iact,
            ct.edge_aidx,
            ct.node_term,
            ct.term_nodes,
            ct.term_payoff,
            ct.chance_term,
            ct.inf_start,
            ct.inf_player,
            ct.n_players,
            1 if update else 0,
            self.regret,
            self.strat,
            uniforms,
            sampled,
            self.opp_acc,
            self.onpath_acc,
            self._samp,
            self._forb,
            self._sub,
            self._iact_acc,
        )
        self.t += iters
        self._tally_block(sampled)

    def _tally_block(self, sampled: np.ndarray) -> None:
        keys_per_player = []
        for p in self.tree.players():
            seq = self.ct.seq[p]
            rows = sampled[:, self._cols[p]] if len(self._cols[p]) else np.zeros((len(sampled), 0), np.int16)
            if seq.n_inf:
                reach = np.zeros(rows.shape, dtype=bool)
                for li in range(seq.n_inf):
                    pa = seq.parent_loc[li]
                    if pa < 0:
                        reach[:, li] = True
                    else:
                        reach[:, li] = reach[:, pa] & (rows[:, pa] == seq.parent_aidx[li])
                rows = np.where(reach, rows, np.int16(-1))
            keys_per_player.append([r.tobytes() for r in rows])
        for row_keys in zip(*keys_per_player):
            self.tally[row_keys] = self.tally.get(row_keys, 0) + 1

    def sampled_regret_table(self, player: int) -> RegretTable:
        ct = self.ct
        table = RegretTable(self.tree, player)
        for iid in self.tree.player_infosets(player):
            table.cum[iid] = self.regret[ct.inf_start[iid] : ct.inf_start[iid + 1]].copy()
        table.iterations = self.t
        return table

    def max_sampled_regret_rate(self, player: int) -> float:
        """(1/T) max over this player's infosets and actions of cumulative regret."""
        if self.t == 0:
            return 0.0
        ct = self.ct
        cols = [
            self.regret[ct.inf_start[i] : ct.inf_start[i + 1]].max()
            for i in self.tree.player_infosets(player)
        ]
        return float(max(cols, default=0.0)) / self.t
