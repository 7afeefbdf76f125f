"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[acceptance] criterion N ...: PASS/FAIL` line (also
appended to acceptance_report.txt next to this file) and then asserts.
"""

import os
import time

import numpy as np
import pytest

from ccelearn import _kernels
from ccelearn.efg import BehavioralStrategy, enumerate_plans
from ccelearn.evaluation import (
    best_response,
    brute_force_cce_gap,
    cce_gap,
    opponent_reach,
    plan_sequence_regret,
    realization_equivalence_check,
)
from ccelearn.games import build_game, figure_two_game, kuhn3, random_game, shapley_efg
from ccelearn.joint import (
    JointDistribution,
    nf_strategy_reconstruction,
    run_cfr,
    run_cfr_jr,
    run_cfr_jr_k,
    run_cfr_s,
)

REPORT_PATH = os.path.join(os.path.dirname(__file__), "acceptance_report.txt")
_trace_cache = {}


@pytest.fixture(scope="module", autouse=True)
def _fresh_report():
    if os.path.exists(REPORT_PATH):
        os.remove(REPORT_PATH)
    yield


def report(num: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"[acceptance] criterion {num} ({name}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    with open(REPORT_PATH, "a") as fh:
        fh.write(line + "\n")
    assert ok, line


def jr_run(spec: str, T: int, eval_every: int = 50):
    key = (spec, T, eval_every)
    if key not in _trace_cache:
        _trace_cache[key] = run_cfr_jr(build_game(spec), T, eval_every=eval_every)
    return _trace_cache[key]


def test_criterion_1_figure_two_exhibit():
    start = time.perf_counter()
    fig2 = figure_two_game()
    plans = [enumerate_plans(fig2, p) for p in fig2.players()]
    profiles = []
    for t in range(1, 101):
        idx = 0 if t % 2 == 0 else 1  # sigma_L at even t, sigma_R at odd t
        profiles.append([plans[0][idx], plans[1][idx]])
    regrets = [plan_sequence_regret(fig2, p, profiles) for p in fig2.players()]

    averages = [
        BehavioralStrategy(fig2, p, {fig2.player_infosets(p)[0]: [0.5, 0.5]})
        for p in fig2.players()
    ]
    from ccelearn.evaluation import product_gap

    prod_eps = product_gap(fig2, averages).epsilon

    diagonal = JointDistribution(fig2)
    diagonal.add_profile([plans[0][0], plans[1][0]], 0.5)
    diagonal.add_profile([plans[0][1], plans[1][1]], 0.5)
    diag_eps = cce_gap(fig2, diagonal).epsilon

    elapsed = time.perf_counter() - start
    ok = (
        regrets == [0.0, 0.0]
        and abs(prod_eps - 0.25) <= 1e-9
        and abs(diag_eps) <= 1e-9
        and elapsed < 1.0
    )
    report(
        1,
        "figure-2 exhibit",
        ok,
        f"regrets={regrets}, product eps={prod_eps}, diagonal eps={diag_eps}, {elapsed:.2f}s",
    )


def test_criterion_2_reconstruction_correctness():
    start = time.perf_counter()
    specs = ["K3-3", "K3-4", "L3-3", "G2-3-AL"]
    per_game = 1000
    checked = 0
    ok = True
    detail = []
    for gi, spec in enumerate(specs):
        tree = build_game(spec)
        z = tree.num_terminals
        rng = np.random.default_rng(1000 + gi)
        for i in range(per_game):
            player = i % tree.num_players
            pi = BehavioralStrategy.random(tree, player, rng)
            x = nf_strategy_reconstruction(tree, player, pi)
            if not (
                realization_equivalence_check(tree, pi, x, tol=1e-9)
                and x.support_size <= z
                and x.passes <= z
            ):
                ok = False
                detail.append(f"{spec}#{i}")
                break
            checked += 1
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 120.0
    report(
        2,
        "reconstruction correctness",
        ok,
        f"{checked} strategies over {specs}, {elapsed:.1f}s" + (f", failures {detail}" if detail else ""),
    )


def test_criterion_3_gap_bounded_by_regret():
    worst = -np.inf
    ok = True
    for spec in ("K3-4", "G2-3-DA"):
        _, trace = jr_run(spec, 10_000)
        for r in trace:
            slack = r.epsilon - max(r.avg_regret_per_player)
            worst = max(worst, slack)
            if slack > 1e-9:
                ok = False
    report(3, "joint gap bounded by average regret", ok, f"worst slack {worst:.2e} over K3-4, G2-3-DA at T=1e4")


def test_criterion_4_convergence_rate():
    start = time.perf_counter()
    ok = True
    details = []
    for spec in ("K3-3", "SHAPLEY"):
        _, trace = jr_run(spec, 20_000)
        reached = min(r.alpha for r in trace) <= 0.05
        pts = [(r.iteration, r.epsilon) for r in trace if 100 <= r.iteration <= 10_000 and r.epsilon > 0]
        slope = float(np.polyfit(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]), 1)[0])
        details.append(f"{spec}: alpha_min={min(r.alpha for r in trace):.2e}, slope={slope:.2f}")
        if not reached or slope > -0.3:
            ok = False
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 600.0
    report(4, "cfr-jr convergence", ok, "; ".join(details) + f", {elapsed:.0f}s")


def test_criterion_5_cfr_s_stochastic_convergence():
    tree = build_game("K3-3")
    alphas_small, alphas_big = [], []
    for seed in range(10):
        _, trace = run_cfr_s(tree, 100_000, seed=seed, eval_at=[1000, 100_000])
        by_iter = {r.iteration: r.alpha for r in trace}
        alphas_small.append(by_iter[1000])
        alphas_big.append(by_iter[100_000])
    mean_small = float(np.mean(alphas_small))
    mean_big = float(np.mean(alphas_big))
    emp_a, trace_a = run_cfr_s(tree, 20_000, seed=0, eval_every=10_000)
    emp_b, trace_b = run_cfr_s(tree, 20_000, seed=0, eval_every=10_000)
    reproducible = dict(emp_a.items_raw()) == dict(emp_b.items_raw()) and [
        r.epsilon for r in trace_a
    ] == [r.epsilon for r in trace_b]
    ok = mean_big <= mean_small and mean_big <= 0.1 and reproducible
    report(
        5,
        "cfr-s empirical frequency",
        ok,
        f"mean alpha@1e3={mean_small:.4f}, @1e5={mean_big:.4f}, reproducible={reproducible}",
    )


def test_criterion_6_oracle_equivalence():
    rng = np.random.default_rng(123)
    games = [figure_two_game(), shapley_efg()] + [random_game(2, 3, seed=s) for s in range(20)]
    worst_gap = 0.0
    worst_br = 0.0
    for tree in games:
        plan_lists = [enumerate_plans(tree, p, cap=10**4) for p in tree.players()]
        jd = JointDistribution(tree)
        weights = rng.dirichlet(np.ones(8))
        for w in weights:
            profile = [plan_lists[p][rng.integers(len(plan_lists[p]))] for p in tree.players()]
            jd.add_profile(profile, float(w))
        fast = cce_gap(tree, jd)
        brute = brute_force_cce_gap(tree, jd)
        worst_gap = max(
            worst_gap,
            float(np.abs(np.array(fast.eps_per_player) - np.array(brute.eps_per_player)).max()),
        )
        from ccelearn.efg import plan_reach

        for player in tree.players():
            opp = opponent_reach(tree, player, jd)
            val, _ = best_response(tree, player, opp)
            utilities = opp.terminal * tree.term_payoffs[:, player]
            enum_best = max(
                float((plan_reach(tree, c).terminal * utilities).sum())
                for c in plan_lists[player]
            )
            worst_br = max(worst_br, abs(val - enum_best))
    ok = worst_gap <= 1e-9 and worst_br <= 1e-12
    report(6, "oracle equivalence", ok, f"gap dev {worst_gap:.2e}, BR dev {worst_br:.2e} over 22 games")


def test_criterion_7_regret_matching_bound():
    rng = np.random.default_rng(7)
    worst_ratio = 0.0
    ok = True
    for n in (2, 3, 5):
        for _ in range(100):
            utilities = rng.uniform(0.0, 1.0, size=(10_000, n))  # payoff range 1
            regret = np.zeros(n)
            strat = np.zeros(n)
            prev = 0
            for t in (100, 1000, 10_000):
                _kernels.rm_bound_sweep(utilities[prev:t], regret, strat)
                prev = t
                bound = np.sqrt(n) / np.sqrt(t)
                ratio = (regret.max() / t) / bound
                worst_ratio = max(worst_ratio, ratio)
                if regret.max() / t > bound:
                    ok = False
        # adaptive adversary: rewards exactly the action the learner plays least
        for _ in range(5):
            regret = np.zeros(n)
            for t in range(1, 10_001):
                pos = np.clip(regret, 0.0, None)
                strat = pos / pos.sum() if pos.sum() > 0 else np.full(n, 1.0 / n)
                u = np.zeros(n)
                u[np.argmin(strat)] = 1.0
                regret += u - strat @ u
                if t in (100, 1000, 10_000):
                    bound = np.sqrt(n) / np.sqrt(t)
                    ratio = (regret.max() / t) / bound
                    worst_ratio = max(worst_ratio, ratio)
                    if regret.max() / t > bound:
                        ok = False
    report(7, "regret matching bound", ok, f"max regret-to-bound ratio {worst_ratio:.3f}")


def test_criterion_8_reconstruction_rate_tradeoff():
    tree = kuhn3(6)
    sizes = {}
    for k in (1, 5, 25, 100):
        joint, _ = run_cfr_jr_k(tree, 5000, k, eval_every=1000)
        sizes[k] = joint.support_size
    monotone = sizes[1] >= sizes[5] >= sizes[25] >= sizes[100]
    j_plain, tr_plain = run_cfr_jr(tree, 5000, eval_every=1000)
    j_k1, tr_k1 = run_cfr_jr_k(tree, 5000, 1, eval_every=1000)
    identical = dict(j_plain.items_raw()) == dict(j_k1.items_raw()) and [
        r.epsilon for r in tr_plain
    ] == [r.epsilon for r in tr_k1]
    ok = monotone and identical
    report(8, "cfr-jr-k support trade-off", ok, f"supports {sizes}, k=1 identical={identical}")


def test_criterion_9_cfr_divergence_exhibit():
    tree = shapley_efg()
    _, cfr_trace = run_cfr(tree, 10_000, eval_every=50)
    cfr_min_alpha = min(r.alpha for r in cfr_trace)
    _, jr_trace = jr_run("SHAPLEY", 20_000)
    jr_alpha_1e4 = min(r.alpha for r in jr_trace if r.iteration <= 10_000)
    ok = cfr_min_alpha > 0.05 and jr_alpha_1e4 <= 0.05
    report(
        9,
        "cfr divergence vs cfr-jr",
        ok,
        f"plain CFR min alpha={cfr_min_alpha:.3f}, CFR-Jr alpha within 1e4={jr_alpha_1e4:.4f}",
    )


def test_criterion_10_social_welfare_reporting():
    ok = True
    details = []
    fig2_joint, fig2_trace = run_cfr_jr(figure_two_game(), 2000, eval_every=50)
    general_sum_traces = {
        "FIG2": fig2_trace,
        "G2-3-DA": jr_run("G2-3-DA", 10_000)[1],
        "SHAPLEY": jr_run("SHAPLEY", 20_000)[1],
    }
    for name, trace in general_sum_traces.items():
        ratios = [r.sw_ratio for r in trace]
        if not all(-1e-12 <= x <= 1.0 + 1e-9 for x in ratios):
            ok = False
            details.append(f"{name} ratio out of range")
    final_fig2 = fig2_trace[-1].sw_ratio
    if final_fig2 < 0.74:
        ok = False
    details.append(f"FIG2 final ratio {final_fig2:.3f}")
    report(10, "social welfare reporting", ok, "; ".join(details))
