"""Numba kernels for solver-critical traversals.

All kernels operate on the flat arrays of :class:`~ccelearn.compiled.CompiledTree`
and mutate caller-owned state in place. Node ids are preorder, so a forward
scan is top-down and a backward scan is bottom-up. Pure-Python reference
implementations of the same updates live in the test suite and must agree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def regret_match_all(regret, strat, inf_start):
    """Regret matching at every infoset: positive part normalized, else uniform."""
    for i in range(inf_start.shape[0] - 1):
        s0 = inf_start[i]
        s1 = inf_start[i + 1]
        tot = 0.0
        for k in range(s0, s1):
            if regret[k] > 0.0:
                tot += regret[k]
        if tot > 0.0:
            for k in range(s0, s1):
                strat[k] = regret[k] / tot if regret[k] > 0.0 else 0.0
        else:
            inv = 1.0 / (s1 - s0)
            for k in range(s0, s1):
                strat[k] = inv


@njit(**_OPTS)
def cfr_iter(
    node_player,
    node_infoset,
    nes,
    edge_child,
    edge_iact,
    edge_prob,
    chance_node,
    node_term,
    term_payoff,
    inf_start,
    n_players,
    regret,
    avg,
    strat,
    reach,
    values,
    term_reach,
    root_vals,
):
    """One simultaneous vanilla CFR iteration for all players.

    Consumes the current profile ``strat``, adds counterfactual regrets and
    reach-weighted strategy sums, then overwrites ``strat`` with the regret
    matching of the updated tables. ``term_reach[i, z]`` and ``root_vals[i]``
    report player i's own reach at terminals and expected value under the
    consumed profile.
    """
    n = node_player.shape[0]
    for j in range(n_players):
        reach[0, j] = 1.0
    for h in range(n):
        pl = node_player[h]
        if pl == -2:
            t = node_term[h]
            for j in range(n_players):
                term_reach[j, t] = reach[h, j]
            continue
        for e in range(nes[h], nes[h + 1]):
            c = edge_child[e]
            for j in range(n_players):
                reach[c, j] = reach[h, j]
            if pl >= 0:
                reach[c, pl] = reach[h, pl] * strat[edge_iact[e]]
    for h in range(n - 1, -1, -1):
        pl = node_player[h]
        if pl == -2:
            t = node_term[h]
            for j in range(n_players):
                values[h, j] = term_payoff[t, j]
            continue
        for j in range(n_players):
            values[h, j] = 0.0
        for e in range(nes[h], nes[h + 1]):
            c = edge_child[e]
            w = edge_prob[e] if pl == -1 else strat[edge_iact[e]]
            for j in range(n_players):
                values[h, j] += w * values[c, j]
    for h in range(n):
        pl = node_player[h]
        if pl < 0:
            continue
        cf = chance_node[h]
        for j in range(n_players):
            if j != pl:
                cf *= reach[h, j]
        own = reach[h, pl]
        base = values[h, pl]
        for e in range(nes[h], nes[h + 1]):
            ia = edge_iact[e]
            regret[ia] += cf * (values[edge_child[e], pl] - base)
            avg[ia] += own * strat[ia]
    for j in range(n_players):
        root_vals[j] = values[0, j]
    regret_match_all(regret, strat, inf_start)


@njit(**_OPTS)
def cfr_s_block(
    node_player,
    node_infoset,
    nes,
    edge_child,
    edge_iact,
    edge_aidx,
    node_term,
    term_nodes,
    term_payoff,
    chance_term,
    inf_start,
    inf_player,
    n_players,
    do_update,
    regret,
    strat,
    uniforms,
    sampled_out,
    opp_acc,
    onpath_acc,
    samp,
    forb,
    sub,
    iact_acc,
):
    """A block of CFR-S iterations (sample plans, laminar regret updates).

    Per iteration: every infoset samples an action from the current profile;
    opponents' sampled plans gate reachability while chance stays in
    expectation; each player's per-infoset regrets absorb the parameterized
    deviation utilities; regret matching produces the next profile. The
    running sums ``opp_acc[i, z]`` (chance times opponents-allow indicator)
    and ``onpath_acc[i]`` (realized chance-expected utility) make the
    empirical frequency of play exactly evaluable at any cut.
    """
    blen = uniforms.shape[0]
    k_inf = inf_start.shape[0] - 1
    n = node_player.shape[0]
    zn = term_nodes.shape[0]
    for b in range(blen):
        for i_s in range(k_inf):
            u = uniforms[b, i_s]
            s0 = inf_start[i_s]
            s1 = inf_start[i_s + 1]
            acc = 0.0
            ai = s1 - s0 - 1
            for k in range(s0, s1):
                acc += strat[k]
                if u < acc:
                    ai = k - s0
                    break
            samp[i_s] = ai
            sampled_out[b, i_s] = ai
        forb[0] = 0
        for h in range(n):
            pl = node_player[h]
            if pl == -2:
                continue
            f = forb[h]
            for e in range(nes[h], nes[h + 1]):
                if pl >= 0 and edge_aidx[e] != samp[node_infoset[h]]:
                    forb[edge_child[e]] = f | (1 << pl)
                else:
                    forb[edge_child[e]] = f
        for t in range(zn):
            m = forb[term_nodes[t]]
            cr = chance_term[t]
            for i in range(n_players):
                if (m & ~(1 << i)) == 0:
                    opp_acc[i, t] += cr
            if m == 0:
                for i in range(n_players):
                    onpath_acc[i] += cr * term_payoff[t, i]
        if do_update == 0:
            continue
        for i in range(n_players):
            for h in range(n - 1, -1, -1):
                pl = node_player[h]
                if pl == -2:
                    t = node_term[h]
                    if (forb[h] & ~(1 << i)) == 0:
                        sub[h] = chance_term[t] * term_payoff[t, i]
                    else:
                        sub[h] = 0.0
                elif pl == i:
                    sub[h] = sub[edge_child[nes[h] + samp[node_infoset[h]]]]
                else:
                    s = 0.0
                    for e in range(nes[h], nes[h + 1]):
                        s += sub[edge_child[e]]
                    sub[h] = s
            for k in range(iact_acc.shape[0]):
                iact_acc[k] = 0.0
            for h in range(n):
                if node_player[h] == i:
                    for e in range(nes[h], nes[h + 1]):
                        iact_acc[edge_iact[e]] += sub[edge_child[e]]
            for i_s in range(k_inf):
                if inf_player[i_s] != i:
                    continue
                base = iact_acc[inf_start[i_s] + samp[i_s]]
                for k in range(inf_start[i_s], inf_start[i_s + 1]):
                    regret[k] += iact_acc[k] - base
        regret_match_all(regret, strat, inf_start)


@njit(**_OPTS)
def reconstruct(
    n_inf,
    act_start,
    parent_loc,
    parent_aidx,
    is_root,
    child_start,
    child_loc,
    direct_start,
    direct_term,
    free_terms,
    omega,
    tol,
    plan_rows,
    plan_w,
    recon_reach,
    best,
    chosen,
    flag,
):
    """Greedy decomposition of a realization vector into weighted plans.

    Repeatedly extracts the plan maximizing the minimum remaining terminal
    mass over its reachable terminals (choosing, bottom-up over the own
    forest, the lowest-index maximizing action), assigns it that minimum as
    weight and subtracts. Entries below ``tol`` are clamped to zero; once the
    extractable weight vanishes, any residue within 100x ``tol`` (subtraction
    drift) is flushed. Returns ``(rows, passes, work, min_seen, status)``
    with status 0 on success, 2 if progress stalled with real mass left,
    3 on plan-buffer overflow.
    """
    zn = omega.shape[0]
    rows = 0
    passes = 0
    work = 0
    min_seen = 0.0
    big = 1e300
    while True:
        mx = 0.0
        for z in range(zn):
            if omega[z] > mx:
                mx = omega[z]
        work += zn
        if mx <= tol:
            break
        for li in range(n_inf - 1, -1, -1):
            bv = -1.0
            bc = 0
            for a in range(act_start[li + 1] - act_start[li]):
                ia = act_start[li] + a
                m = big
                for d in range(direct_start[ia], direct_start[ia + 1]):
                    v = omega[direct_term[d]]
                    if v < m:
                        m = v
                for cx in range(child_start[ia], child_start[ia + 1]):
                    v = best[child_loc[cx]]
                    if v < m:
                        m = v
                work += 1 + (direct_start[ia + 1] - direct_start[ia]) + (
                    child_start[ia + 1] - child_start[ia]
                )
                if m > bv:
                    bv = m
                    bc = a
            best[li] = bv
            chosen[li] = bc
        wbar = big
        for fz in range(free_terms.shape[0]):
            if omega[free_terms[fz]] < wbar:
                wbar = omega[free_terms[fz]]
        for li in range(n_inf):
            if is_root[li] == 1 and best[li] < wbar:
                wbar = best[li]
        if wbar <= tol:
            stall_tol = 100.0 * tol
            clamped = 0
            lim = stall_tol if mx <= stall_tol else tol
            for z in range(zn):
                if 0.0 < omega[z] <= lim:
                    omega[z] = 0.0
                    clamped += 1
            work += zn
            if clamped == 0:
                return rows, passes, work, min_seen, 2
            continue
        if rows >= plan_w.shape[0]:
            return rows, passes, work, min_seen, 3
        passes += 1
        for li in range(n_inf):
            if is_root[li] == 1:
                flag[li] = 1
            else:
                pa = parent_loc[li]
                flag[li] = 1 if (flag[pa] == 1 and chosen[pa] == parent_aidx[li]) else 0
            if flag[li] == 1:
                a = chosen[li]
                plan_rows[rows, li] = a
                ia = act_start[li] + a
                for d in range(direct_start[ia], direct_start[ia + 1]):
                    z = direct_term[d]
                    omega[z] -= wbar
                    if omega[z] < min_seen:
                        min_seen = omega[z]
                    if omega[z] < tol:
                        omega[z] = 0.0
                    recon_reach[z] += wbar
            else:
                plan_rows[rows, li] = -1
            work += 1
        for fz in range(free_terms.shape[0]):
            z = free_terms[fz]
            omega[z] -= wbar
            if omega[z] < min_seen:
                min_seen = omega[z]
            if omega[z] < tol:
                omega[z] = 0.0
            recon_reach[z] += wbar
        work += free_terms.shape[0]
        plan_w[rows] = wbar
        rows += 1
    return rows, passes, work, min_seen, 0


@njit(**_OPTS)
def rm_bound_sweep(utilities, regret, strat):
    """Run regret matching against a fixed utility sequence, in place.

    ``utilities`` has shape [T, n_actions]; returns nothing, leaves the final
    cumulative regrets in ``regret``. Used by the adversarial bound checks.
    """
    t_max = utilities.shape[0]
    n = utilities.shape[1]
    for t in range(t_max):
        tot = 0.0
        for a in range(n):
            if regret[a] > 0.0:
                tot += regret[a]
        if tot > 0.0:
            for a in range(n):
                strat[a] = regret[a] / tot if regret[a] > 0.0 else 0.0
        else:
            for a in range(n):
                strat[a] = 1.0 / n
        ev = 0.0
        for a in range(n):
            ev += strat[a] * utilities[t, a]
        for a in range(n):
            regret[a] += utilities[t, a] - ev
