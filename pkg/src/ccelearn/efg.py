"""Core extensive-form game model: trees, infosets, strategies, plans, reach.

Games are finite trees with imperfect information and perfect recall. Nodes
carry dense integer ids assigned in depth-first preorder (parents always
precede children), which makes runs bit-reproducible and lets traversals work
on flat arrays.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

CHANCE = -1
TERMINAL = -2

PROB_TOL = 1e-12  # validation tolerance for probability sums
EQUIV_TOL = 1e-9  # tolerance for realization-equivalence comparisons


class TreeError(ValueError):
    """Structural problem with a game tree or mismatched arguments."""


class PlanCapExceeded(RuntimeError):
    """Plan enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class InfoSet:
    """A set of decision nodes indistinguishable to the acting player."""

    id: int
    player: int
    key: str
    actions: tuple[str, ...]
    nodes: tuple[int, ...]

    @property
    def num_actions(self) -> int:
        return len(self.actions)


class GameTree:
    """Immutable extensive-form game.

    Instances are produced by :class:`TreeBuilder`; direct construction is not
    supported. The tree is safe to share across threads: all traversal
    operations are pure functions of the tree and their inputs.
    """

    def __init__(self, *, _token=None, **fields):
        if _token is not _BUILD_TOKEN:
            raise TypeError("use TreeBuilder to construct a GameTree")
        self.__dict__.update(fields)
        self._compiled = None

    # populated fields (documented here for readers):
    #   num_players: int
    #   node_player: np.ndarray int32, CHANCE/TERMINAL markers for non-decision
    #   node_parent: np.ndarray int32 (-1 at root)
    #   node_action: list[str | None], edge label from the parent
    #   node_infoset: np.ndarray int32 (-1 for chance/terminal)
    #   node_actions: list[tuple[str, ...] | None], labels at decision/chance
    #   node_children: list[tuple[int, ...]], aligned with node_actions
    #   node_chance_probs: list[tuple[float, ...] | None]
    #   node_payoffs: list[tuple[float, ...] | None]
    #   infosets: tuple[InfoSet, ...]
    #   terminals: np.ndarray int32 (node ids in preorder)
    #   term_index: np.ndarray int32 (node id -> terminal index, -1 otherwise)
    #   term_payoffs: np.ndarray float64 [num_terminals, num_players]

    ROOT = 0

    @property
    def num_nodes(self) -> int:
        return len(self.node_player)

    @property
    def num_terminals(self) -> int:
        return len(self.terminals)

    def players(self) -> range:
        return range(self.num_players)

    def is_terminal(self, node: int) -> bool:
        return self.node_player[node] == TERMINAL

    def infoset_of(self, node: int) -> InfoSet | None:
        i = self.node_infoset[node]
        return self.infosets[i] if i >= 0 else None

    def player_infosets(self, player: int) -> tuple[int, ...]:
        self._check_player(player)
        return self._player_infosets[player]

    def actions_at(self, node: int) -> tuple[str, ...]:
        acts = self.node_actions[node]
        if acts is None:
            raise TreeError(f"node {node} is terminal")
        return acts

    def child(self, node: int, action_idx: int) -> int:
        return self.node_children[node][action_idx]

    def history(self, node: int) -> tuple[str, ...]:
        """Edge labels from the root to ``node`` (the node's identity)."""
        labels = []
        while node != self.ROOT:
            labels.append(self.node_action[node])
            node = self.node_parent[node]
        return tuple(reversed(labels))

    def node_by_history(self, labels: Sequence[str]) -> int:
        node = self.ROOT
        for lab in labels:
            acts = self.actions_at(node)
            try:
                node = self.node_children[node][acts.index(lab)]
            except ValueError:
                raise TreeError(f"no action {lab!r} at node {node}") from None
        return node

    def compiled(self):
        """Flat-array view used by traversal kernels (cached, lazily built)."""
        if self._compiled is None:
            issues = validate(self)
            if issues:
                raise TreeError("invalid game tree: " + "; ".join(issues))
            from . import compiled as _c

            self._compiled = _c.CompiledTree(self)
        return self._compiled

    def _check_player(self, player: int) -> None:
        if not 0 <= player < self.num_players:
            raise TreeError(f"player {player} out of range for {self.num_players}-player game")

    def __repr__(self) -> str:
        return (
            f"GameTree(players={self.num_players}, nodes={self.num_nodes}, "
            f"infosets={len(self.infosets)}, terminals={self.num_terminals})"
        )


_BUILD_TOKEN = object()


class TreeBuilder:
    """Incremental constructor for :class:`GameTree`.

    The builder is permissive: it accepts trees that break semantic invariants
    (mismatched infoset actions, bad chance probabilities, imperfect recall)
    so that :func:`validate` can report them. Structural completeness (every
    declared action has exactly one child, payoff vectors have the right
    arity) is enforced at :meth:`finalize`.
    """

    def __init__(self, num_players: int):
        if num_players < 1:
            raise TreeError("need at least one player")
        self.num_players = num_players
        self._player = []
        self._parent = []
        self._action = []
        self._actions = []
        self._payoffs = []
        self._infoset_key = []
        self._edge_prob = []

    def _add(self, parent, action, player, actions, payoffs, infoset_key, prob):
        if parent is None:
            if self._player:
                raise TreeError("root already exists")
            if action is not None:
                raise TreeError("root has no incoming action")
        else:
            if not 0 <= parent < len(self._player):
                raise TreeError(f"unknown parent {parent}")
            if self._player[parent] == TERMINAL:
                raise TreeError(f"parent {parent} is terminal")
            if action is None:
                raise TreeError("child nodes need an incoming action label")
            if (self._player[parent] == CHANCE) != (prob is not None):
                raise TreeError("edge probability required exactly for chance parents")
        nid = len(self._player)
        self._player.append(player)
        self._parent.append(-1 if parent is None else parent)
        self._action.append(action)
        self._actions.append(actions)
        self._payoffs.append(payoffs)
        self._infoset_key.append(infoset_key)
        self._edge_prob.append(prob)
        return nid

    def add_chance(self, parent: int | None, action: str | None, *, prob: float | None = None) -> int:
        return self._add(parent, action, CHANCE, None, None, None, prob)

    def add_decision(
        self,
        parent: int | None,
        action: str | None,
        *,
        player: int,
        infoset_key,
        actions: Sequence[str],
        prob: float | None = None,
    ) -> int:
        if not 0 <= player < self.num_players:
            raise TreeError(f"player {player} out of range")
        return self._add(parent, action, player, tuple(actions), None, infoset_key, prob)

    def add_terminal(
        self,
        parent: int | None,
        action: str | None,
        *,
        payoffs: Sequence[float],
        prob: float | None = None,
    ) -> int:
        if len(payoffs) != self.num_players:
            raise TreeError("payoff vector arity mismatch")
        return self._add(parent, action, TERMINAL, None, tuple(float(u) for u in payoffs), None, prob)

    def finalize(self) -> GameTree:
        n = len(self._player)
        if n == 0:
            raise TreeError("empty tree")

        children: list[dict[str, int]] = [dict() for _ in range(n)]
        for nid in range(n):
            p = self._parent[nid]
            if p < 0:
                continue
            lab = self._action[nid]
            if lab in children[p]:
                raise TreeError(f"duplicate child action {lab!r} at node {p}")
            children[p][lab] = nid

        # child ordering: declared action order at decision nodes, insertion
        # order at chance nodes
        ordered: list[list[int]] = [[] for _ in range(n)]
        for nid in range(n):
            pl = self._player[nid]
            if pl == TERMINAL:
                if children[nid]:
                    raise TreeError(f"terminal node {nid} has children")
                continue
            if pl == CHANCE:
                labs = list(children[nid])
                self._actions[nid] = tuple(labs)
            else:
                labs = list(self._actions[nid])
                missing = set(labs) - set(children[nid])
                extra = set(children[nid]) - set(labs)
                if missing or extra:
                    raise TreeError(f"node {nid}: children do not match declared actions")
            ordered[nid] = [children[nid][lab] for lab in labs]

        # re-index in depth-first preorder
        perm = np.full(n, -1, dtype=np.int32)  # old id -> new id
        order = []
        stack = [0]
        while stack:
            nid = stack.pop()
            perm[nid] = len(order)
            order.append(nid)
            stack.extend(reversed(ordered[nid]))
        if len(order) != n:
            raise TreeError("disconnected nodes present")

        node_player = np.array([self._player[o] for o in order], dtype=np.int32)
        node_parent = np.array(
            [-1 if self._parent[o] < 0 else perm[self._parent[o]] for o in order], dtype=np.int32
        )
        node_action = [self._action[o] for o in order]
        node_actions = [self._actions[o] for o in order]
        node_payoffs = [self._payoffs[o] for o in order]
        node_children = [tuple(int(perm[c]) for c in ordered[o]) for o in order]
        node_chance_probs = [
            tuple(float(self._edge_prob[c]) for c in ordered[o]) if self._player[o] == CHANCE else None
            for o in order
        ]

        # infosets: grouped by (player, key), ids in order of first member node
        group: dict[tuple[int, object], list[int]] = {}
        for new_id, old in enumerate(order):
            if self._player[old] >= 0:
                group.setdefault((self._player[old], self._infoset_key[old]), []).append(new_id)
        infosets = []
        node_infoset = np.full(n, -1, dtype=np.int32)
        for (player, key), nodes in sorted(group.items(), key=lambda kv: kv[1][0]):
            iid = len(infosets)
            infosets.append(
                InfoSet(
                    id=iid,
                    player=player,
                    key=str(key),
                    actions=tuple(node_actions[nodes[0]]),
                    nodes=tuple(nodes),
                )
            )
            for h in nodes:
                node_infoset[h] = iid

        terminals = np.array([i for i in range(n) if node_player[i] == TERMINAL], dtype=np.int32)
        term_index = np.full(n, -1, dtype=np.int32)
        term_index[terminals] = np.arange(len(terminals), dtype=np.int32)
        term_payoffs = np.array([node_payoffs[t] for t in terminals], dtype=np.float64)
        if term_payoffs.size == 0:
            term_payoffs = term_payoffs.reshape(0, self.num_players)

        player_infosets = tuple(
            tuple(i.id for i in infosets if i.player == p) for p in range(self.num_players)
        )

        return GameTree(
            _token=_BUILD_TOKEN,
            num_players=self.num_players,
            node_player=node_player,
            node_parent=node_parent,
            node_action=node_action,
            node_actions=node_actions,
            node_infoset=node_infoset,
            node_children=node_children,
            node_chance_probs=node_chance_probs,
            node_payoffs=node_payoffs,
            infosets=tuple(infosets),
            terminals=terminals,
            term_index=term_index,
            term_payoffs=term_payoffs,
            _player_infosets=player_infosets,
        )


def _own_history(tree: GameTree, node: int, player: int) -> tuple[tuple[int, int], ...]:
    """The sequence of (infoset, action index) pairs of ``player`` above ``node``."""
    seq = []
    child = node
    parent = tree.node_parent[node]
    while parent >= 0:
        if tree.node_player[parent] == player:
            aidx = tree.node_children[parent].index(child)
            seq.append((int(tree.node_infoset[parent]), aidx))
        child = parent
        parent = tree.node_parent[parent]
    return tuple(reversed(seq))


def validate(tree: GameTree) -> list[str]:
    """Check all tree invariants, returning one diagnostic per violation.

    An empty list means the tree is a well-formed perfect-recall EFG. The
    checks cover: every non-terminal has actions with unique labels, infoset
    members share one action list, chance probabilities form distributions,
    and perfect recall holds.
    """
    issues = []
    for h in range(tree.num_nodes):
        pl = tree.node_player[h]
        if pl == TERMINAL:
            continue
        acts = tree.node_actions[h]
        if not acts:
            issues.append(f"no actions: node {h}")
            continue
        if len(set(acts)) != len(acts):
            issues.append(f"duplicate action label: node {h}")
        if pl == CHANCE:
            probs = tree.node_chance_probs[h]
            if any(q < 0 for q in probs):
                issues.append(f"negative chance probability: node {h}")
            if abs(sum(probs) - 1.0) > PROB_TOL:
                issues.append(f"chance probabilities do not sum to 1: node {h}")
    for ifs in tree.infosets:
        base = ifs.actions
        if any(tree.node_actions[h] != base for h in ifs.nodes):
            issues.append(f"infoset action mismatch: infoset {ifs.id}")
        histories = {_own_history(tree, h, ifs.player) for h in ifs.nodes}
        if len(histories) > 1:
            issues.append(f"perfect recall violation: infoset {ifs.id}")
    return issues


class BehavioralStrategy:
    """Per-infoset probability distributions over actions for one player."""

    def __init__(self, tree: GameTree, player: int, table: Mapping[int, Sequence[float]]):
        tree._check_player(player)
        self.tree = tree
        self.player = player
        dist: dict[int, np.ndarray] = {}
        for iid in tree.player_infosets(player):
            ifs = tree.infosets[iid]
            if iid not in table:
                raise TreeError(f"missing distribution for infoset {iid}")
            probs = np.asarray(table[iid], dtype=np.float64)
            if probs.shape != (ifs.num_actions,):
                raise TreeError(f"wrong arity at infoset {iid}")
            if probs.min() < 0 or abs(probs.sum() - 1.0) > PROB_TOL:
                raise TreeError(f"not a probability distribution at infoset {iid}")
            dist[iid] = probs
        self.table = dist

    @classmethod
    def uniform(cls, tree: GameTree, player: int) -> "BehavioralStrategy":
        return cls(
            tree,
            player,
            {
                iid: np.full(tree.infosets[iid].num_actions, 1.0 / tree.infosets[iid].num_actions)
                for iid in tree.player_infosets(player)
            },
        )

    @classmethod
    def random(cls, tree: GameTree, player: int, rng: np.random.Generator) -> "BehavioralStrategy":
        return cls(
            tree,
            player,
            {
                iid: rng.dirichlet(np.ones(tree.infosets[iid].num_actions))
                for iid in tree.player_infosets(player)
            },
        )

    @classmethod
    def from_plan(cls, tree: GameTree, plan: "NormalFormPlan") -> "BehavioralStrategy":
        """Deterministic strategy playing ``plan`` (uniform off the plan's path)."""
        table = {}
        for iid in tree.player_infosets(plan.player):
            n = tree.infosets[iid].num_actions
            a = plan.action_at(iid)
            if a is None:
                table[iid] = np.full(n, 1.0 / n)
            else:
                probs = np.zeros(n)
                probs[a] = 1.0
                table[iid] = probs
        return cls(tree, plan.player, table)

    def prob(self, infoset_id: int) -> np.ndarray:
        return self.table[infoset_id]

    def flat(self) -> np.ndarray:
        """Probabilities spread over the tree-wide (infoset, action) table."""
        ct = self.tree.compiled()
        out = np.zeros(ct.n_iacts)
        for iid, probs in self.table.items():
            out[ct.inf_start[iid] : ct.inf_start[iid + 1]] = probs
        return out


@dataclass(frozen=True)
class NormalFormPlan:
    """A reduced normal-form plan: one action per own-reachable infoset.

    ``choices`` holds (infoset id, action index) pairs sorted by infoset id;
    infosets that the plan's own earlier choices make unreachable are simply
    absent (the "any" sentinel).
    """

    player: int
    choices: tuple[tuple[int, int], ...]

    def action_at(self, infoset_id: int) -> int | None:
        for iid, a in self.choices:
            if iid == infoset_id:
                return a
        return None

    def describe(self, tree: GameTree) -> str:
        parts = [
            f"{tree.infosets[iid].key}={tree.infosets[iid].actions[a]}" for iid, a in self.choices
        ]
        return f"plan(p{self.player}: " + ", ".join(parts) + ")"


class RealizationVector:
    """Per-terminal reach probabilities for one player's strategy or plan."""

    def __init__(
        self,
        tree: GameTree,
        player: int,
        terminal: np.ndarray,
        infoset_reach: dict[int, float] | None = None,
    ):
        self.tree = tree
        self.player = player
        self.terminal = np.asarray(terminal, dtype=np.float64)
        self.infoset_reach = infoset_reach

    def at_node(self, node: int) -> float:
        t = self.tree.term_index[node]
        if t < 0:
            raise TreeError(f"node {node} is not terminal")
        return float(self.terminal[t])

    def as_dict(self) -> dict[tuple[str, ...], float]:
        return {
            self.tree.history(int(z)): float(self.terminal[t])
            for t, z in enumerate(self.tree.terminals)
        }


def behavioral_reach(tree: GameTree, strategy: BehavioralStrategy) -> RealizationVector:
    """Reach probability contributed by one player's behavioral strategy.

    Entry ``z`` is the product of the strategy's action probabilities along
    the root-to-``z`` path; chance and the other players are treated as
    playing toward ``z``. Per-infoset reach is included for the owner.
    """
    if strategy.tree is not tree:
        raise TreeError("strategy belongs to a different tree")
    ct = tree.compiled()
    reach = ct.node_reach_for(strategy.flat(), strategy.player)
    inf_reach = {
        iid: float(reach[tree.infosets[iid].nodes[0]]) for iid in tree.player_infosets(strategy.player)
    }
    return RealizationVector(tree, strategy.player, reach[ct.term_nodes], inf_reach)


def plan_reach(tree: GameTree, plan: NormalFormPlan) -> RealizationVector:
    """0/1 reach vector of a reduced plan; support equals its reachable terminals."""
    tree._check_player(plan.player)
    ct = tree.compiled()
    seq = ct.seq[plan.player]
    term = seq.plan_terminal_mask(plan).astype(np.float64)
    reachable = seq.reachable_infosets(plan)
    inf_reach = {iid: 1.0 if iid in reachable else 0.0 for iid in tree.player_infosets(plan.player)}
    return RealizationVector(tree, plan.player, term, inf_reach)


def plan_terminals_from(tree: GameTree, plan: NormalFormPlan, infoset_id: int, action_idx: int) -> set[int]:
    """Terminal nodes reachable from ``infoset_id`` playing ``action_idx`` then ``plan``.

    The restriction of a plan's reachable-terminal set used by the
    reconstruction recursion; opponents and chance are unconstrained, and
    infosets the reduced plan leaves unspecified ("any") match every action.
    """
    out = set()
    for z in tree.terminals:
        hist = _own_history(tree, int(z), plan.player)
        try:
            k = hist.index((infoset_id, action_idx))
        except ValueError:
            continue
        if all(plan.action_at(i) in (a, None) for i, a in hist[k + 1 :]):
            out.add(int(z))
    return out


def canonicalize(tree: GameTree, player: int, assignment: Mapping[int, int]) -> NormalFormPlan:
    """Reduce a full action-per-infoset assignment to its canonical plan.

    Two assignments map to the same plan exactly when they agree on every
    infoset reachable under their own choices.
    """
    tree._check_player(player)
    seq = tree.compiled().seq[player]
    choices = []
    for iid in seq.topo_global:
        ifs = tree.infosets[iid]
        par = seq.own_parent_of(iid)
        if par is not None:
            pid, paidx = par
            chosen = dict(choices).get(pid)
            if chosen != paidx:
                continue
        if iid not in assignment:
            raise TreeError(f"assignment missing infoset {iid}")
        a = assignment[iid]
        if not 0 <= a < ifs.num_actions:
            raise TreeError(f"action {a} out of range at infoset {iid}")
        choices.append((iid, a))
    return NormalFormPlan(player, tuple(sorted(choices)))


def count_plans(tree: GameTree, player: int) -> int:
    """Number of reduced plans, by recursive product over the own-infoset forest."""
    tree._check_player(player)
    seq = tree.compiled().seq[player]
    memo: dict[int, int] = {}

    def count(iid: int) -> int:
        if iid in memo:
            return memo[iid]
        total = 0
        for a in range(tree.infosets[iid].num_actions):
            prod = 1
            for child in seq.children_of(iid, a):
                prod *= count(child)
            total += prod
        memo[iid] = total
        return total

    result = 1
    for r in seq.root_infosets:
        result *= count(r)
    return result


def enumerate_plans(tree: GameTree, player: int, cap: int = 10**6) -> list[NormalFormPlan]:
    """All reduced plans of ``player``, each exactly once.

    Raises :class:`PlanCapExceeded` when the plan space is larger than ``cap``
    (checked up front via :func:`count_plans`).
    """
    n = count_plans(tree, player)
    if n > cap:
        raise PlanCapExceeded(f"player {player} has {n} plans, cap is {cap}")
    seq = tree.compiled().seq[player]

    def expand(iid: int) -> list[tuple[tuple[int, int], ...]]:
        out = []
        for a in range(tree.infosets[iid].num_actions):
            sub = [()]
            for child in seq.children_of(iid, a):
                sub = [s + t for s in sub for t in expand(child)]
            out.extend(((iid, a),) + s for s in sub)
        return out

    partials = [()]
    for r in seq.root_infosets:
        partials = [s + t for s in partials for t in expand(r)]
    return [NormalFormPlan(player, tuple(sorted(ch))) for ch in partials]
