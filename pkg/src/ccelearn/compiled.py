"""Flat-array views of a game tree for fast traversal.

``CompiledTree`` lowers a validated :class:`~ccelearn.efg.GameTree` to CSR
edge arrays plus, per player, an "own forest" over that player's infosets
(the sequence structure induced by perfect recall). Solver kernels and the
vectorized reach/best-response paths all work on these arrays.
"""

from __future__ import annotations

import numpy as np

from .efg import CHANCE, TERMINAL, GameTree, NormalFormPlan, TreeError


class CompiledTree:
    def __init__(self, tree: GameTree):
        self.tree = tree
        n = tree.num_nodes
        p = tree.num_players
        self.n_nodes = n
        self.n_players = p

        self.node_player = tree.node_player
        self.node_infoset = tree.node_infoset
        self.node_term = tree.term_index
        self.term_nodes = tree.terminals
        self.term_payoff = tree.term_payoffs
        self.n_terms = len(self.term_nodes)

        # (infoset, action) flat table
        k = len(tree.infosets)
        self.n_infosets = k
        self.inf_player = np.array([i.player for i in tree.infosets], dtype=np.int32)
        counts = np.array([i.num_actions for i in tree.infosets], dtype=np.int32)
        self.inf_start = np.zeros(k + 1, dtype=np.int32)
        np.cumsum(counts, out=self.inf_start[1:])
        self.n_iacts = int(self.inf_start[-1])
        self.iact_infoset = np.repeat(np.arange(k, dtype=np.int32), counts) if k else np.zeros(0, np.int32)
        self.iact_action = (
            np.concatenate([np.arange(c, dtype=np.int32) for c in counts]) if k else np.zeros(0, np.int32)
        )
        self.player_infosets = [
            np.array(tree.player_infosets(j), dtype=np.int32) for j in range(p)
        ]
        self.player_iacts = [
            np.concatenate(
                [np.arange(self.inf_start[i], self.inf_start[i + 1]) for i in self.player_infosets[j]]
            ).astype(np.int32)
            if len(self.player_infosets[j])
            else np.zeros(0, np.int32)
            for j in range(p)
        ]

        # CSR edges in node order; children are stored in action order
        deg = np.array([len(tree.node_children[h]) for h in range(n)], dtype=np.int32)
        self.nes = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(deg, out=self.nes[1:])
        m = int(self.nes[-1])
        self.n_edges = m
        self.edge_child = np.zeros(m, dtype=np.int32)
        self.edge_parent = np.zeros(m, dtype=np.int32)
        self.edge_prob = np.ones(m, dtype=np.float64)
        self.edge_iact = np.full(m, -1, dtype=np.int32)
        self.edge_owner = np.full(m, CHANCE, dtype=np.int32)
        self.edge_aidx = np.zeros(m, dtype=np.int32)
        depth = np.zeros(n, dtype=np.int32)
        for h in range(n):
            pl = tree.node_player[h]
            if pl == TERMINAL:
                continue
            base = self.nes[h]
            for a, c in enumerate(tree.node_children[h]):
                e = base + a
                self.edge_child[e] = c
                self.edge_parent[e] = h
                self.edge_aidx[e] = a
                depth[c] = depth[h] + 1
                if pl == CHANCE:
                    self.edge_prob[e] = tree.node_chance_probs[h][a]
                else:
                    self.edge_owner[e] = pl
                    self.edge_iact[e] = self.inf_start[tree.node_infoset[h]] + a
        self.node_depth = depth

        # edges grouped by parent depth for level-synchronous vectorized sweeps
        order = np.argsort(depth[self.edge_parent], kind="stable") if m else np.zeros(0, np.int64)
        self.lv_child = self.edge_child[order]
        self.lv_parent = self.edge_parent[order]
        self.lv_prob = self.edge_prob[order]
        self.lv_iact = self.edge_iact[order]
        self.lv_owner = self.edge_owner[order]
        lv_depth = depth[self.lv_parent] if m else np.zeros(0, np.int32)
        bounds = np.flatnonzero(np.diff(lv_depth)) + 1 if m else np.zeros(0, np.int64)
        starts = np.concatenate(([0], bounds, [m])).astype(np.int64)
        self.levels = [(int(starts[i]), int(starts[i + 1])) for i in range(len(starts) - 1)]

        # chance-only reach
        cr = np.ones(n, dtype=np.float64)
        for s, e in self.levels:
            mult = np.where(self.lv_owner[s:e] == CHANCE, self.lv_prob[s:e], 1.0)
            cr[self.lv_child[s:e]] = cr[self.lv_parent[s:e]] * mult
        self.chance_node = cr
        self.chance_term = cr[self.term_nodes] if self.n_terms else np.zeros(0)

        # per-player own forests
        self.seq = [PlayerSeq(self, j) for j in range(p)]

    def node_reach_for(self, flat_strategy: np.ndarray, player: int) -> np.ndarray:
        """Reach contribution of ``player`` alone at every node."""
        reach = np.ones(self.n_nodes, dtype=np.float64)
        if flat_strategy.size == 0:
            return reach
        for s, e in self.levels:
            own = self.lv_owner[s:e] == player
            mult = np.where(own, flat_strategy[np.where(own, self.lv_iact[s:e], 0)], 1.0)
            reach[self.lv_child[s:e]] = reach[self.lv_parent[s:e]] * mult
        return reach


class PlayerSeq:
    """One player's infoset forest plus terminal hooks (sequence structure).

    Under perfect recall every terminal hangs off at most one last own
    (infoset, action) pair, and the own-parent relation turns the player's
    infosets into a forest. Reduced plans, reconstruction, plan reach and
    best responses are all defined on this structure.
    """

    def __init__(self, ct: CompiledTree, player: int):
        tree = ct.tree
        self.ct = ct
        self.player = player
        gids = list(ct.player_infosets[player])
        self.n_inf = len(gids)
        self.topo_global = [int(g) for g in gids]  # first-node preorder = parents first
        loc = {g: i for i, g in enumerate(self.topo_global)}
        self.loc_of_global = loc

        self.n_actions = np.array(
            [tree.infosets[g].num_actions for g in self.topo_global], dtype=np.int32
        )
        self.act_start = np.zeros(self.n_inf + 1, dtype=np.int32)
        np.cumsum(self.n_actions, out=self.act_start[1:])
        self.n_iacts = int(self.act_start[-1])

        # own parent of each infoset: last own (infoset, action) above the
        # first member node (identical for all members in a valid tree)
        parent_loc = np.full(self.n_inf, -1, dtype=np.int32)
        parent_aidx = np.full(self.n_inf, -1, dtype=np.int32)
        for li, g in enumerate(self.topo_global):
            pair = self._last_own_above(tree.infosets[g].nodes[0])
            if pair is not None:
                parent_loc[li] = loc[pair[0]]
                parent_aidx[li] = pair[1]
        self.parent_loc = parent_loc
        self.parent_aidx = parent_aidx
        self.root_locs = np.flatnonzero(parent_loc < 0).astype(np.int32)
        self.root_infosets = [self.topo_global[i] for i in self.root_locs]

        # children per local (infoset, action)
        buckets: list[list[int]] = [[] for _ in range(self.n_iacts)]
        for li in range(self.n_inf):
            if parent_loc[li] >= 0:
                buckets[self.act_start[parent_loc[li]] + parent_aidx[li]].append(li)
        self.child_start = np.zeros(self.n_iacts + 1, dtype=np.int32)
        np.cumsum([len(b) for b in buckets], out=self.child_start[1:])
        self.child_loc = np.array([c for b in buckets for c in b], dtype=np.int32)

        # last own (infoset, action) per terminal; -1 when the player never acts
        last_li = np.full(ct.n_terms, -1, dtype=np.int32)
        last_ai = np.full(ct.n_terms, -1, dtype=np.int32)
        for t, z in enumerate(ct.term_nodes):
            pair = self._last_own_above(int(z))
            if pair is not None:
                last_li[t] = loc[pair[0]]
                last_ai[t] = pair[1]
        self.term_last_li = last_li
        self.term_last_ai = last_ai
        self.free_terms = np.flatnonzero(last_li < 0).astype(np.int32)
        tb: list[list[int]] = [[] for _ in range(self.n_iacts)]
        for t in range(ct.n_terms):
            if last_li[t] >= 0:
                tb[self.act_start[last_li[t]] + last_ai[t]].append(t)
        self.direct_start = np.zeros(self.n_iacts + 1, dtype=np.int32)
        np.cumsum([len(b) for b in tb], out=self.direct_start[1:])
        self.direct_term = np.array([t for b in tb for t in b], dtype=np.int32)

    def _last_own_above(self, node: int) -> tuple[int, int] | None:
        tree = self.ct.tree
        child = node
        parent = tree.node_parent[node]
        while parent >= 0:
            if tree.node_player[parent] == self.player:
                return int(tree.node_infoset[parent]), tree.node_children[parent].index(child)
            child = parent
            parent = tree.node_parent[parent]
        return None

    # forest accessors in tree-global infoset ids
    def own_parent_of(self, infoset_id: int) -> tuple[int, int] | None:
        li = self.loc_of_global[infoset_id]
        if self.parent_loc[li] < 0:
            return None
        return self.topo_global[self.parent_loc[li]], int(self.parent_aidx[li])

    def children_of(self, infoset_id: int, action_idx: int) -> list[int]:
        ia = self.act_start[self.loc_of_global[infoset_id]] + action_idx
        return [self.topo_global[c] for c in self.child_loc[self.child_start[ia] : self.child_start[ia + 1]]]

    # plan handling -----------------------------------------------------

    def row_from_plan(self, plan: NormalFormPlan) -> np.ndarray:
        """Compact encoding: int16 action per local infoset, -1 = unreachable."""
        row = np.full(self.n_inf, -1, dtype=np.int16)
        for iid, a in plan.choices:
            row[self.loc_of_global[iid]] = a
        return row

    def plan_from_row(self, row: np.ndarray) -> NormalFormPlan:
        choices = tuple(
            sorted((self.topo_global[li], int(a)) for li, a in enumerate(row) if a >= 0)
        )
        return NormalFormPlan(self.player, choices)

    def reachable_infosets(self, plan: NormalFormPlan) -> set[int]:
        chosen = dict(plan.choices)
        reach: set[int] = set()
        for li in range(self.n_inf):
            g = self.topo_global[li]
            pl = self.parent_loc[li]
            if pl < 0:
                reach.add(g)
            elif self.topo_global[pl] in reach and chosen.get(self.topo_global[pl]) == self.parent_aidx[li]:
                reach.add(g)
        missing = reach - set(chosen)
        if missing:
            raise TreeError(f"plan does not cover reachable infosets {sorted(missing)}")
        return reach

    def plan_terminal_mask(self, plan: NormalFormPlan) -> np.ndarray:
        reach = self.reachable_infosets(plan)
        allowed = np.zeros(self.n_iacts, dtype=bool)
        for iid, a in plan.choices:
            if iid in reach:
                allowed[self.act_start[self.loc_of_global[iid]] + a] = True
        mask = self.term_last_li < 0
        hooked = ~mask
        mask = mask.copy()
        idx = self.act_start[self.term_last_li[hooked]] + self.term_last_ai[hooked]
        mask[hooked] = allowed[idx]
        return mask

    def rows_terminal_matrix(self, rows: np.ndarray) -> np.ndarray:
        """Boolean reach matrix [n_rows, n_terms] for stacked plan rows."""
        s = rows.shape[0]
        reach = np.zeros((s, self.n_inf), dtype=bool)
        for li in range(self.n_inf):
            pl = self.parent_loc[li]
            if pl < 0:
                reach[:, li] = True
            else:
                reach[:, li] = reach[:, pl] & (rows[:, pl] == self.parent_aidx[li])
        out = np.zeros((s, self.ct.n_terms), dtype=bool)
        free = self.term_last_li < 0
        out[:, free] = True
        hooked = np.flatnonzero(~free)
        if len(hooked):
            li = self.term_last_li[hooked]
            ai = self.term_last_ai[hooked]
            out[:, hooked] = reach[:, li] & (rows[:, li] == ai[None, :])
        return out

    def mixture_terminal_reach(self, rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Realization vector of a weighted plan mixture given as stacked rows."""
        if rows.shape[0] == 0:
            return np.zeros(self.ct.n_terms)
        return weights @ self.rows_terminal_matrix(rows)
