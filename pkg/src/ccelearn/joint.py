"""Normal-form strategy reconstruction, joint distributions, solver drivers.

The reconstruction turns a behavioral strategy into a realization-equivalent
sparse mixture of reduced plans by greedily peeling off the plan whose
reachable terminals have the largest minimum remaining mass. Drivers combine
it with the regret engines into the cfr / cfr-s / cfr-jr / cfr-jr-k solvers.
"""

from __future__ import annotations

import itertools
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .efg import (
    EQUIV_TOL,
    BehavioralStrategy,
    GameTree,
    NormalFormPlan,
    RealizationVector,
    TreeError,
    behavioral_reach,
)
from .regret import CfrSolver, CfrSSolver

OMEGA_TOL = 1e-12  # terminal mass below this is treated as zero


class NormalFormStrategy:
    """Sparse probability distribution over one player's reduced plans."""

    def __init__(self, tree: GameTree, player: int, mass: Mapping[NormalFormPlan, float]):
        tree._check_player(player)
        seq = tree.compiled().seq[player]
        rows: dict[bytes, float] = {}
        for plan, w in mass.items():
            if plan.player != player:
                raise TreeError("plan owner mismatch")
            reach = seq.reachable_infosets(plan)  # raises on under-specified plans
            if len(reach) != len(plan.choices):
                raise TreeError("plan carries choices at unreachable infosets")
            key = seq.row_from_plan(plan).tobytes()
            rows[key] = rows.get(key, 0.0) + float(w)
        self._init_from_rows(tree, player, rows)

    @classmethod
    def _from_row_weights(cls, tree: GameTree, player: int, rows: dict[bytes, float]) -> "NormalFormStrategy":
        self = cls.__new__(cls)
        self._init_from_rows(tree, player, rows)
        return self

    def _init_from_rows(self, tree: GameTree, player: int, rows: dict[bytes, float]) -> None:
        self.tree = tree
        self.player = player
        self._mass = rows
        self._decoded: dict[bytes, NormalFormPlan] = {}
        total = sum(rows.values())
        if any(w <= 0.0 for w in rows.values()):
            raise TreeError("plan weights must be positive")
        if abs(total - 1.0) > EQUIV_TOL:
            raise TreeError(f"plan weights sum to {total}, expected 1")
        if len(rows) > tree.num_terminals:
            raise TreeError("support exceeds the number of terminals")

    @property
    def support_size(self) -> int:
        return len(self._mass)

    def rows_weights(self) -> tuple[np.ndarray, np.ndarray]:
        seq = self.tree.compiled().seq[self.player]
        if not self._mass:
            return np.zeros((0, seq.n_inf), np.int16), np.zeros(0)
        rows = np.stack([np.frombuffer(k, dtype=np.int16) for k in self._mass])
        return rows, np.array(list(self._mass.values()))

    def items(self):
        seq = self.tree.compiled().seq[self.player]
        for key, w in self._mass.items():
            plan = self._decoded.get(key)
            if plan is None:
                plan = seq.plan_from_row(np.frombuffer(key, dtype=np.int16))
                self._decoded[key] = plan
            yield plan, w

    def as_dict(self) -> dict[NormalFormPlan, float]:
        return dict(self.items())

    def prob(self, plan: NormalFormPlan) -> float:
        seq = self.tree.compiled().seq[self.player]
        return self._mass.get(seq.row_from_plan(plan).tobytes(), 0.0)

    def realization(self) -> RealizationVector:
        seq = self.tree.compiled().seq[self.player]
        rows, w = self.rows_weights()
        return RealizationVector(self.tree, self.player, seq.mixture_terminal_reach(rows, w))


class JointDistribution:
    """Sparse weighted map over joint reduced plans, with averaging bookkeeping.

    ``total`` is the accumulated (unnormalized) mass; iterating solvers add
    one unit per accumulation and the normalized view divides by it.
    """

    def __init__(self, tree: GameTree):
        self.tree = tree
        self._mass: dict[tuple[bytes, ...], float] = {}
        self.total = 0.0
        self.accumulations = 0
        self._mask_cache: list[dict[bytes, np.ndarray]] = [dict() for _ in tree.players()]

    @property
    def support_size(self) -> int:
        return len(self._mass)

    def add_product(self, strategies: Sequence[NormalFormStrategy]) -> None:
        """Accumulate the product distribution of per-player strategies."""
        if len(strategies) != self.tree.num_players:
            raise TreeError("need one strategy per player")
        per_player = []
        for p, x in enumerate(strategies):
            if x.player != p or x.tree is not self.tree:
                raise TreeError("strategies must be ordered by player on this tree")
            per_player.append(list(x._mass.items()))
        mass = self._mass
        for combo in itertools.product(*per_player):
            w = 1.0
            for _, wi in combo:
                w *= wi
            key = tuple(k for k, _ in combo)
            mass[key] = mass.get(key, 0.0) + w
        self.total += 1.0
        self.accumulations += 1

    def add_profile(self, plans: Sequence[NormalFormPlan], weight: float = 1.0) -> None:
        if len(plans) != self.tree.num_players:
            raise TreeError("need one plan per player")
        key = []
        for p, plan in enumerate(plans):
            if plan.player != p:
                raise TreeError("plans must be ordered by player")
            seq = self.tree.compiled().seq[p]
            key.append(seq.row_from_plan(plan).tobytes())
        key = tuple(key)
        self._mass[key] = self._mass.get(key, 0.0) + weight
        self.total += weight
        self.accumulations += 1

    @classmethod
    def from_counts(cls, tree: GameTree, counts: Mapping[tuple[bytes, ...], int]) -> "JointDistribution":
        self = cls(tree)
        self._mass = {k: float(c) for k, c in counts.items()}
        self.total = float(sum(counts.values()))
        self.accumulations = int(sum(counts.values()))
        return self

    def items_raw(self):
        return self._mass.items()

    def normalized_items(self):
        """Yield (plan profile, probability) pairs with decoded plans."""
        if self.total <= 0:
            return
        seqs = [self.tree.compiled().seq[p] for p in self.tree.players()]
        cache: dict[tuple[int, bytes], NormalFormPlan] = {}
        for key, w in self._mass.items():
            plans = []
            for p, kb in enumerate(key):
                plan = cache.get((p, kb))
                if plan is None:
                    plan = seqs[p].plan_from_row(np.frombuffer(kb, dtype=np.int16))
                    cache[(p, kb)] = plan
                plans.append(plan)
            yield tuple(plans), w / self.total

    def player_mask(self, player: int, key: bytes) -> np.ndarray:
        """Cached terminal reach mask of one player's encoded plan."""
        cache = self._mask_cache[player]
        m = cache.get(key)
        if m is None:
            seq = self.tree.compiled().seq[player]
            row = np.frombuffer(key, dtype=np.int16).reshape(1, -1)
            m = seq.rows_terminal_matrix(row)[0]
            cache[key] = m
        return m

    def validate(self) -> None:
        if any(w < 0 for w in self._mass.values()):
            raise TreeError("negative joint weight")
        if self.total > 0:
            s = sum(self._mass.values()) / self.total
            if abs(s - 1.0) > EQUIV_TOL:
                raise TreeError(f"normalized joint mass sums to {s}")


def joint_accumulate(acc: JointDistribution, strategies: Sequence[NormalFormStrategy]) -> JointDistribution:
    """Add the product of per-player strategies into the accumulator."""
    acc.add_product(strategies)
    return acc


# ---------------------------------------------------------------------------
# reconstruction

def argmax_min_plan(tree: GameTree, player: int, omega) -> tuple[NormalFormPlan, float]:
    """Plan maximizing the minimum of ``omega`` over its reachable terminals.

    Built bottom-up over the player's own-infoset forest, breaking ties toward
    the lowest action index. Returns the plan and the attained minimum.
    """
    tree._check_player(player)
    w = np.asarray(omega, dtype=np.float64)
    if w.shape != (tree.num_terminals,):
        raise TreeError("omega must have one entry per terminal")
    if w.min() < -OMEGA_TOL:
        raise ValueError("omega has negative entries")
    if w.max() <= OMEGA_TOL:
        raise ValueError("omega is all zero")
    seq = tree.compiled().seq[player]
    best = np.zeros(seq.n_inf)
    chosen = np.zeros(seq.n_inf, dtype=np.int64)
    for li in range(seq.n_inf - 1, -1, -1):
        bv, bc = -1.0, 0
        for a in range(seq.n_actions[li]):
            ia = seq.act_start[li] + a
            parts = [w[seq.direct_term[d]] for d in range(seq.direct_start[ia], seq.direct_start[ia + 1])]
            parts += [best[c] for c in seq.child_loc[seq.child_start[ia] : seq.child_start[ia + 1]]]
            m = min(parts) if parts else np.inf
            if m > bv:
                bv, bc = m, a
        best[li], chosen[li] = bv, bc
    minimum = min(
        [w[z] for z in seq.free_terms] + [best[r] for r in seq.root_locs],
        default=np.inf,
    )
    choices = {}
    stack = [int(r) for r in seq.root_locs]
    while stack:
        li = stack.pop()
        a = int(chosen[li])
        choices[seq.topo_global[li]] = a
        ia = seq.act_start[li] + a
        stack.extend(int(c) for c in seq.child_loc[seq.child_start[ia] : seq.child_start[ia + 1]])
    return NormalFormPlan(player, tuple(sorted(choices.items()))), float(minimum)


def _reconstruct_from_omega(tree: GameTree, player: int, omega: np.ndarray) -> NormalFormStrategy:
    ct = tree.compiled()
    seq = ct.seq[player]
    zn = ct.n_terms
    cap = zn + 2
    plan_rows = np.full((cap, seq.n_inf), -1, dtype=np.int16)
    plan_w = np.zeros(cap)
    recon_reach = np.zeros(zn)
    is_root = np.zeros(seq.n_inf, dtype=np.uint8)
    is_root[seq.root_locs] = 1
    rows, passes, work, min_seen, status = _kernels.reconstruct(
        seq.n_inf,
        seq.act_start,
        seq.parent_loc,
        seq.parent_aidx,
        is_root,
        seq.child_start,
        seq.child_loc,
        seq.direct_start,
        seq.direct_term,
        seq.free_terms,
        omega,
        OMEGA_TOL,
        plan_rows,
        plan_w,
        recon_reach,
        np.zeros(seq.n_inf),
        np.zeros(seq.n_inf, dtype=np.int16),
        np.zeros(seq.n_inf, dtype=np.uint8),
    )
    if status != 0:
        raise RuntimeError(f"reconstruction failed with status {status}")
    if passes > zn:
        raise AssertionError(f"reconstruction used {passes} passes on {zn} terminals")
    if min_seen < -OMEGA_TOL:
        raise AssertionError(f"omega went negative ({min_seen}) during reconstruction")
    bound = (2 * zn + 2) * (3 * zn + seq.n_iacts + 2 * seq.n_inf + 2)
    if work > bound:
        raise AssertionError(f"reconstruction work {work} exceeded quadratic bound {bound}")
    mass = {plan_rows[i].tobytes(): float(plan_w[i]) for i in range(rows)}
    if len(mass) != rows:
        raise AssertionError("a plan was selected twice during reconstruction")
    out = NormalFormStrategy._from_row_weights(tree, player, mass)
    out.passes = passes
    out.work = work
    out.recon_reach = recon_reach
    return out


def nf_strategy_reconstruction(tree: GameTree, player: int, strategy: BehavioralStrategy) -> NormalFormStrategy:
    """Realization-equivalent sparse plan mixture of a behavioral strategy.

    The main loop runs at most once per terminal and the support never
    exceeds the number of terminals; both are asserted, along with the
    quadratic work bound and omega staying non-negative.
    """
    if strategy.player != player or strategy.tree is not tree:
        raise TreeError("strategy owner mismatch")
    omega = behavioral_reach(tree, strategy).terminal.copy()
    return _reconstruct_from_omega(tree, player, omega)


# ---------------------------------------------------------------------------
# solver drivers

@dataclass
class TraceRecord:
    """One evaluation point of a solver run."""

    iteration: int
    time_s: float  # cumulative solver time, evaluation sweeps excluded
    time_total_s: float  # cumulative wall time including evaluation
    epsilon: float
    alpha: float
    eps_per_player: tuple[float, ...]
    sw: float
    sw_ratio: float
    support: int
    avg_regret_per_player: tuple[float, ...] | None = None

    def to_jsonable(self) -> dict:
        d = {
            "iteration": self.iteration,
            "time_s": self.time_s,
            "time_total_s": self.time_total_s,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "eps_per_player": list(self.eps_per_player),
            "sw": self.sw,
            "sw_ratio": self.sw_ratio,
            "support": self.support,
        }
        if self.avg_regret_per_player is not None:
            d["avg_regret_per_player"] = list(self.avg_regret_per_player)
        return d

    @classmethod
    def from_jsonable(cls, d: dict) -> "TraceRecord":
        return cls(
            iteration=d["iteration"],
            time_s=d["time_s"],
            time_total_s=d["time_total_s"],
            epsilon=d["epsilon"],
            alpha=d["alpha"],
            eps_per_player=tuple(d["eps_per_player"]),
            sw=d["sw"],
            sw_ratio=d["sw_ratio"],
            support=d["support"],
            avg_regret_per_player=tuple(d["avg_regret_per_player"])
            if "avg_regret_per_player" in d
            else None,
        )


def eval_schedule(T: int, eval_every: int | None, eval_at: Sequence[int] | None) -> list[int]:
    """Iterations at which a run is evaluated (always includes T)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if eval_at is not None:
        pts = sorted({int(x) for x in eval_at if 1 <= int(x) <= T} | {T})
    else:
        step = eval_every or 50
        pts = list(range(step, T + 1, step))
        if not pts or pts[-1] != T:
            pts.append(T)
    return pts


def _alpha(eps: float, delta: float) -> float:
    return eps / delta if delta > 0 else 0.0


def _sw_ratio(sw: float, ub: float) -> float:
    return sw / ub if abs(ub) > 1e-12 else 1.0


class _GapScaffold:
    """Shared payoff-range / welfare-bound constants of an evaluated run."""

    def __init__(self, tree: GameTree):
        from . import evaluation

        self.ev = evaluation
        self.delta = evaluation.payoff_range(tree)
        self.swub = evaluation.sw_upper_bound(tree)


class CfrJrDriver:
    """CFR-Jr / CFR-Jr-k: deterministic CFR plus joint-distribution averaging.

    Every ``k``-th iteration the players' current behavioral strategies are
    reconstructed into plan mixtures whose product is added to the running
    joint distribution. Trace gaps are measured on that joint distribution
    (through its per-iteration realization sums), while per-player external
    regrets are measured independently from the behavioral iterates.
    """

    def __init__(self, tree: GameTree, k: int = 1):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.tree = tree
        self.k = k
        self.solver = CfrSolver(tree)
        ct = tree.compiled()
        self.ct = ct
        self.joint = JointDistribution(tree)
        p, z = ct.n_players, ct.n_terms
        self.opp_a = np.zeros((p, z))
        self.on_a = np.zeros(p)
        self.opp_b = np.zeros((p, z))
        self.on_b = np.zeros(p)
        self.recons = 0
        self.solver_time = 0.0
        self.total_time = 0.0
        self.scaffold = _GapScaffold(tree)
        self.trace: list[TraceRecord] = []

    @property
    def t(self) -> int:
        return self.solver.t

    def step(self) -> None:
        t0 = time.perf_counter()
        solver = self.solver
        solver.iterate()
        ct = self.ct
        reach = solver.term_reach
        chance = ct.chance_term
        for i in range(ct.n_players):
            prod = chance.copy()
            for j in range(ct.n_players):
                if j != i:
                    prod *= reach[j]
            self.opp_b[i] += prod
        self.on_b += solver.root_values
        if solver.t % self.k == 0:
            xs = []
            for i in range(ct.n_players):
                xs.append(_reconstruct_from_omega(self.tree, i, reach[i].copy()))
            self.joint.add_product(xs)
            self.recons += 1
            for i in range(ct.n_players):
                prod = chance.copy()
                for j in range(ct.n_players):
                    if j != i:
                        prod *= xs[j].recon_reach
                self.opp_a[i] += prod
            full = chance.copy()
            for j in range(ct.n_players):
                full *= xs[j].recon_reach
            self.on_a += full @ ct.term_payoff
        dt = time.perf_counter() - t0
        self.solver_time += dt
        self.total_time += dt

    def evaluate(self) -> TraceRecord:
        t0 = time.perf_counter()
        ev = self.scaffold.ev
        ct = self.ct
        p = ct.n_players
        eps = np.zeros(p)
        regrets = np.zeros(p)
        n = max(self.recons, 1)
        for i in range(p):
            br_a, _ = ev.best_response(self.tree, i, self.opp_a[i] / n)
            eps[i] = br_a - self.on_a[i] / n
            br_b, _ = ev.best_response(self.tree, i, self.opp_b[i] / max(self.t, 1))
            regrets[i] = br_b - self.on_b[i] / max(self.t, 1)
        sw = float(self.on_a.sum() / n)
        rec = TraceRecord(
            iteration=self.t,
            time_s=self.solver_time,
            time_total_s=self.total_time,
            epsilon=float(eps.max()),
            alpha=_alpha(float(eps.max()), self.scaffold.delta),
            eps_per_player=tuple(map(float, eps)),
            sw=sw,
            sw_ratio=_sw_ratio(sw, self.scaffold.swub),
            support=self.joint.support_size,
            avg_regret_per_player=tuple(map(float, regrets)),
        )
        self.total_time += time.perf_counter() - t0
        self.trace.append(rec)
        return rec

    def run(self, T: int, eval_every: int | None = 50, eval_at: Sequence[int] | None = None,
            time_limit_s: float | None = None) -> bool:
        """Advance to iteration T; returns True when stopped by the time limit."""
        points = set(eval_schedule(T, eval_every, eval_at))
        start = time.perf_counter()
        while self.t < T:
            self.step()
            # before the first reconstruction there is no joint to evaluate
            if self.t in points and self.recons > 0:
                self.evaluate()
            if time_limit_s is not None and time.perf_counter() - start > time_limit_s:
                if self.recons > 0 and (not self.trace or self.trace[-1].iteration != self.t):
                    self.evaluate()
                return True
        return False

    def state_dict(self) -> dict:
        joint_entries = [
            [[np.frombuffer(kb, dtype=np.int16).tolist() for kb in key], w]
            for key, w in self.joint._mass.items()
        ]
        return {
            "k": self.k,
            "t": self.t,
            "recons": self.recons,
            "regret": self.solver.regret.tolist(),
            "avg": self.solver.avg.tolist(),
            "strat": self.solver.strat.tolist(),
            "opp_a": self.opp_a.tolist(),
            "on_a": self.on_a.tolist(),
            "opp_b": self.opp_b.tolist(),
            "on_b": self.on_b.tolist(),
            "joint": joint_entries,
            "joint_total": self.joint.total,
            "joint_accums": self.joint.accumulations,
            "solver_time": self.solver_time,
            "total_time": self.total_time,
            "trace": [r.to_jsonable() for r in self.trace],
        }

    @classmethod
    def from_state(cls, tree: GameTree, state: dict) -> "CfrJrDriver":
        self = cls(tree, state["k"])
        self.solver.t = state["t"]
        self.solver.regret[:] = state["regret"]
        self.solver.avg[:] = state["avg"]
        self.solver.strat[:] = state["strat"]
        self.recons = state["recons"]
        self.opp_a[:] = state["opp_a"]
        self.on_a[:] = state["on_a"]
        self.opp_b[:] = state["opp_b"]
        self.on_b[:] = state["on_b"]
        for rows, w in state["joint"]:
            key = tuple(np.asarray(r, dtype=np.int16).tobytes() for r in rows)
            self.joint._mass[key] = w
        self.joint.total = state["joint_total"]
        self.joint.accumulations = state["joint_accums"]
        self.solver_time = state["solver_time"]
        self.total_time = state["total_time"]
        self.trace = [TraceRecord.from_jsonable(r) for r in state["trace"]]
        return self


def run_cfr_jr(tree: GameTree, T: int, eval_every: int | None = 50,
               eval_at: Sequence[int] | None = None) -> tuple[JointDistribution, list[TraceRecord]]:
    """Deterministic CFR-Jr for ``T`` iterations (reconstruction every iteration)."""
    return run_cfr_jr_k(tree, T, 1, eval_every, eval_at)


def run_cfr_jr_k(tree: GameTree, T: int, k: int, eval_every: int | None = 50,
                 eval_at: Sequence[int] | None = None) -> tuple[JointDistribution, list[TraceRecord]]:
    """CFR-Jr reconstructing only at iterations k, 2k, ...; average over floor(T/k)."""
    if k > T:
        raise ValueError("k must not exceed T")
    driver = CfrJrDriver(tree, k)
    driver.run(T, eval_every, eval_at)
    return driver.joint, driver.trace


class CfrSDriver:
    """CFR-S run: sampled plans, empirical frequency of play, exact gap trace."""

    def __init__(self, tree: GameTree, seed: int, freeze_updates: bool = False):
        self.tree = tree
        self.solver = CfrSSolver(tree, seed)
        self.freeze = freeze_updates
        self.scaffold = _GapScaffold(tree)
        self.solver_time = 0.0
        self.total_time = 0.0
        self.trace: list[TraceRecord] = []

    @property
    def t(self) -> int:
        return self.solver.t

    def advance(self, iters: int) -> None:
        t0 = time.perf_counter()
        self.solver.run_block(iters, update=not self.freeze)
        dt = time.perf_counter() - t0
        self.solver_time += dt
        self.total_time += dt

    def evaluate(self) -> TraceRecord:
        t0 = time.perf_counter()
        ev = self.scaffold.ev
        solver = self.solver
        t = max(solver.t, 1)
        p = self.tree.num_players
        eps = np.zeros(p)
        for i in range(p):
            br, _ = ev.best_response(self.tree, i, solver.opp_acc[i] / t)
            eps[i] = br - solver.onpath_acc[i] / t
        sw = float(solver.onpath_acc.sum() / t)
        rec = TraceRecord(
            iteration=solver.t,
            time_s=self.solver_time,
            time_total_s=self.total_time,
            epsilon=float(eps.max()),
            alpha=_alpha(float(eps.max()), self.scaffold.delta),
            eps_per_player=tuple(map(float, eps)),
            sw=sw,
            sw_ratio=_sw_ratio(sw, self.scaffold.swub),
            support=len(solver.tally),
        )
        self.total_time += time.perf_counter() - t0
        self.trace.append(rec)
        return rec

    def run(self, T: int, eval_every: int | None = 50, eval_at: Sequence[int] | None = None,
            time_limit_s: float | None = None) -> bool:
        points = eval_schedule(T, eval_every, eval_at)
        start = time.perf_counter()
        prev = self.t
        for pt in points:
            if pt <= prev:
                continue
            self.advance(pt - prev)
            prev = pt
            self.evaluate()
            if time_limit_s is not None and time.perf_counter() - start > time_limit_s:
                return pt < T
        return False

    def empirical(self) -> JointDistribution:
        return JointDistribution.from_counts(self.tree, self.solver.tally)

    def state_dict(self) -> dict:
        solver = self.solver
        return {
            "seed": solver.seed,
            "t": solver.t,
            "freeze": self.freeze,
            "regret": solver.regret.tolist(),
            "strat": solver.strat.tolist(),
            "opp_acc": solver.opp_acc.tolist(),
            "onpath_acc": solver.onpath_acc.tolist(),
            "tally": [
                [[np.frombuffer(kb, dtype=np.int16).tolist() for kb in key], c]
                for key, c in solver.tally.items()
            ],
            "rng": [g.bit_generator.state for g in solver._rngs],
            "solver_time": self.solver_time,
            "total_time": self.total_time,
            "trace": [r.to_jsonable() for r in self.trace],
        }

    @classmethod
    def from_state(cls, tree: GameTree, state: dict) -> "CfrSDriver":
        self = cls(tree, state["seed"], freeze_updates=state["freeze"])
        solver = self.solver
        solver.t = state["t"]
        solver.regret[:] = state["regret"]
        solver.strat[:] = state["strat"]
        solver.opp_acc[:] = state["opp_acc"]
        solver.onpath_acc[:] = state["onpath_acc"]
        for rows, c in state["tally"]:
            key = tuple(np.asarray(r, dtype=np.int16).tobytes() for r in rows)
            solver.tally[key] = c
        for g, st in zip(solver._rngs, state["rng"]):
            g.bit_generator.state = st
        self.solver_time = state["solver_time"]
        self.total_time = state["total_time"]
        self.trace = [TraceRecord.from_jsonable(r) for r in state["trace"]]
        return self


def run_cfr_s(tree: GameTree, T: int, seed: int, eval_every: int | None = 50,
              eval_at: Sequence[int] | None = None,
              _freeze_updates: bool = False) -> tuple[JointDistribution, list[TraceRecord]]:
    """CFR-S for ``T`` iterations; returns the empirical frequency of play."""
    driver = CfrSDriver(tree, seed, freeze_updates=_freeze_updates)
    driver.run(T, eval_every, eval_at)
    return driver.empirical(), driver.trace


class CfrDriver:
    """Plain CFR: no joint tracking; the trace evaluates the product of averages."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.solver = CfrSolver(tree)
        self.scaffold = _GapScaffold(tree)
        self.solver_time = 0.0
        self.total_time = 0.0
        self.trace: list[TraceRecord] = []

    @property
    def t(self) -> int:
        return self.solver.t

    def step(self) -> None:
        t0 = time.perf_counter()
        self.solver.iterate()
        dt = time.perf_counter() - t0
        self.solver_time += dt
        self.total_time += dt

    def evaluate(self) -> TraceRecord:
        t0 = time.perf_counter()
        ev = self.scaffold.ev
        averages = [self.solver.average_strategy(p) for p in self.tree.players()]
        report = ev.product_gap(self.tree, averages)
        rec = TraceRecord(
            iteration=self.t,
            time_s=self.solver_time,
            time_total_s=self.total_time,
            epsilon=report.epsilon,
            alpha=report.alpha,
            eps_per_player=report.eps_per_player,
            sw=report.sw,
            sw_ratio=_sw_ratio(report.sw, self.scaffold.swub),
            support=0,
        )
        self.total_time += time.perf_counter() - t0
        self.trace.append(rec)
        return rec

    def run(self, T: int, eval_every: int | None = 50, eval_at: Sequence[int] | None = None,
            time_limit_s: float | None = None) -> bool:
        points = set(eval_schedule(T, eval_every, eval_at))
        start = time.perf_counter()
        while self.t < T:
            self.step()
            if self.t in points:
                self.evaluate()
            if time_limit_s is not None and time.perf_counter() - start > time_limit_s:
                return True
        return False

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "regret": self.solver.regret.tolist(),
            "avg": self.solver.avg.tolist(),
            "strat": self.solver.strat.tolist(),
            "solver_time": self.solver_time,
            "total_time": self.total_time,
            "trace": [r.to_jsonable() for r in self.trace],
        }

    @classmethod
    def from_state(cls, tree: GameTree, state: dict) -> "CfrDriver":
        self = cls(tree)
        self.solver.t = state["t"]
        self.solver.regret[:] = state["regret"]
        self.solver.avg[:] = state["avg"]
        self.solver.strat[:] = state["strat"]
        self.solver_time = state["solver_time"]
        self.total_time = state["total_time"]
        self.trace = [TraceRecord.from_jsonable(r) for r in state["trace"]]
        return self


def run_cfr(tree: GameTree, T: int, eval_every: int | None = 50,
            eval_at: Sequence[int] | None = None) -> tuple[list[BehavioralStrategy], list[TraceRecord]]:
    """Vanilla CFR; returns the average behavioral profile and its product-gap trace."""
    driver = CfrDriver(tree)
    driver.run(T, eval_every, eval_at)
    return [driver.solver.average_strategy(p) for p in tree.players()], driver.trace
