"""Smaller API surfaces: plan restrictions, table dumps, runner concurrency."""

import json

from ccelearn.efg import canonicalize, plan_terminals_from
from ccelearn.experiments import ExperimentConfig, persist_instance, load_instance, run
from ccelearn.games import kuhn3, random_game
from ccelearn.regret import CfrSolver, cfr_iteration
from ccelearn.serialize import structurally_equal


def test_plan_terminals_from_t1(t1):
    plan_l = canonicalize(t1, 0, {0: 0, 1: 0})  # reduced to (L, any)
    plan_rl = canonicalize(t1, 0, {0: 1, 1: 0})
    z1, z2, z3 = (int(z) for z in t1.terminals)
    # restriction at I2: the "any" sentinel admits either continuation
    assert plan_terminals_from(t1, plan_l, 1, 0) == {z2}
    assert plan_terminals_from(t1, plan_l, 1, 1) == {z3}
    assert plan_terminals_from(t1, plan_rl, 0, 1) == {z2}
    assert plan_terminals_from(t1, plan_rl, 0, 0) == {z1}


def test_cfr_iteration_returns_next_profile(fig2):
    solver = CfrSolver(fig2)
    nxt = cfr_iteration(solver)
    assert solver.t == 1
    assert set(nxt) == {0, 1}
    for p, strategy in nxt.items():
        probs = strategy.prob(fig2.player_infosets(p)[0])
        assert abs(probs.sum() - 1.0) <= 1e-12


def test_regret_table_json_dump(kuhn33):
    solver = CfrSolver(kuhn33)
    for _ in range(3):
        solver.iterate()
    table = solver.regret_table(0)
    doc = json.loads(json.dumps(table.to_jsonable()))
    assert doc["player"] == 0 and doc["iterations"] == 3
    assert set(doc["cum"]) == {str(i) for i in kuhn33.player_infosets(0)}


def test_persist_and_load_instance(tmp_path):
    tree = random_game(3, 3, seed=13, chance_freq=0.4)
    path = tmp_path / "inst.json"
    persist_instance(tree, str(path))
    assert structurally_equal(tree, load_instance(str(path)))


def test_runner_with_workers():
    config = ExperimentConfig(
        game="K3-3", algo="cfr-s", iters=400, eval_every=200, seeds=(0, 1, 2, 3), workers=4
    )
    parallel = run(config)
    serial = run(ExperimentConfig(
        game="K3-3", algo="cfr-s", iters=400, eval_every=200, seeds=(0, 1, 2, 3), workers=1
    ))
    for a, b in zip(parallel.cells, serial.cells):
        assert a.seed == b.seed
        assert [r.epsilon for r in a.trace] == [r.epsilon for r in b.trace]


def test_eval_at_schedule(kuhn33):
    from ccelearn.joint import run_cfr_jr

    _, trace = run_cfr_jr(kuhn33, 500, eval_at=[30, 250, 9999])
    assert [r.iteration for r in trace] == [30, 250, 500]
    assert all(b.iteration > a.iteration for a, b in zip(trace, trace[1:]))


def test_cfr_jr_k_skips_evaluation_before_first_reconstruction(kuhn33):
    from ccelearn.joint import run_cfr_jr_k

    _, trace = run_cfr_jr_k(kuhn33, 200, 120, eval_every=50)
    # points at 50 and 100 precede the first reconstruction at t=120
    assert [r.iteration for r in trace] == [150, 200]


def test_four_player_random_game_end_to_end():
    from ccelearn.games import random_game
    from ccelearn.joint import run_cfr_jr, run_cfr_s

    tree = random_game(4, 4, seed=2, chance_freq=0.3)
    joint, trace = run_cfr_jr(tree, 200, eval_every=100)
    assert all(r.epsilon >= -1e-9 for r in trace)
    emp, strace = run_cfr_s(tree, 2000, seed=0, eval_every=1000)
    assert all(r.epsilon >= -1e-9 for r in strace)
    assert strace[-1].epsilon <= strace[0].epsilon + 1e-9 or strace[-1].epsilon <= 0.05
