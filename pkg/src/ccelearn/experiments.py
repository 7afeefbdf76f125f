"""Configuration-driven experiment runner with machine-readable traces.

A config names a game instance, an algorithm and its budget; :func:`run`
executes every (algorithm, seed) cell, records trace points at the
evaluation cadence, and summarizes when each accuracy target was first hit
(mean and standard deviation across seeds). Traces are emitted as CSV with
the fixed header ``iteration,time_s,epsilon,alpha,sw,sw_ratio,support`` or
as JSON mirroring the full records.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .efg import GameTree
from .games import build_game, parse_game_spec
from .joint import CfrDriver, CfrJrDriver, CfrSDriver, TraceRecord
from .serialize import (
    CHECKPOINT_SCHEMA_VERSION,
    load_checkpoint,
    load_game,
    save_checkpoint,
    save_game,
)

ALGORITHMS = ("cfr", "cfr-s", "cfr-jr", "cfr-jr-k")

CSV_HEADER = "iteration,time_s,epsilon,alpha,sw,sw_ratio,support"


@dataclass(frozen=True)
class ExperimentConfig:
    game: str
    algo: str
    iters: int
    k: int = 1
    seeds: tuple[int, ...] = (0,)
    eval_every: int = 50
    eval_at: tuple[int, ...] | None = None
    alpha_targets: tuple[float, ...] = (0.05, 0.01, 0.005)
    out_dir: str | None = None
    time_limit_s: float | None = None
    fmt: str = "csv"
    workers: int = 1
    record_time: bool = True

    def validate(self) -> None:
        parse_game_spec(self.game)
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.k < 1 or (self.algo == "cfr-jr-k" and self.k > self.iters):
            raise ValueError("need 1 <= k <= iters")
        if self.algo == "cfr-s" and not self.seeds:
            raise ValueError("cfr-s needs at least one seed")
        if any(not 0.0 < a <= 1.0 for a in self.alpha_targets):
            raise ValueError("alpha targets must lie in (0, 1]")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "algo": self.algo,
            "iters": self.iters,
            "k": self.k,
            "seeds": list(self.seeds),
            "eval_every": self.eval_every,
            "eval_at": list(self.eval_at) if self.eval_at is not None else None,
            "alpha_targets": list(self.alpha_targets),
            "out_dir": self.out_dir,
            "time_limit_s": self.time_limit_s,
            "fmt": self.fmt,
            "workers": self.workers,
            "record_time": self.record_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("seeds", "alpha_targets", "eval_at"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class CellResult:
    """One executed (algorithm, seed) cell."""

    game: str
    algo: str
    seed: int | None
    trace: list[TraceRecord]
    truncated: bool
    first_hit: dict[float, tuple[int, float] | None]
    state: dict | None = None  # checkpoint payload when truncated

    @property
    def name(self) -> str:
        base = f"{_slug(self.game)}_{self.algo}"
        if self.seed is not None:
            base += f"_s{self.seed}"
        return base


@dataclass
class RunResult:
    config: ExperimentConfig
    cells: list[CellResult]
    summary: list[dict] = field(default_factory=list)

    @property
    def any_target_hit(self) -> bool:
        return any(hit is not None for c in self.cells for hit in c.first_hit.values())

    @property
    def truncated(self) -> bool:
        return any(c.truncated for c in self.cells)


def _slug(game: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-." else "_" for ch in game)


def first_hits(trace: list[TraceRecord], targets) -> dict[float, tuple[int, float] | None]:
    """First (iteration, solver time) at which each alpha target was reached."""
    out: dict[float, tuple[int, float] | None] = {}
    for a in targets:
        hit = next((r for r in trace if r.alpha <= a), None)
        out[a] = (hit.iteration, hit.time_s) if hit else None
    return out


def _run_cell(tree: GameTree, config: ExperimentConfig, seed: int | None,
              resume_state: dict | None = None) -> CellResult:
    algo = config.algo
    if algo == "cfr-s":
        driver = (
            CfrSDriver.from_state(tree, resume_state)
            if resume_state
            else CfrSDriver(tree, seed if seed is not None else 0)
        )
    elif algo == "cfr":
        driver = CfrDriver.from_state(tree, resume_state) if resume_state else CfrDriver(tree)
    else:
        k = config.k if algo == "cfr-jr-k" else 1
        driver = CfrJrDriver.from_state(tree, resume_state) if resume_state else CfrJrDriver(tree, k)
    truncated = driver.run(
        config.iters, config.eval_every, config.eval_at, time_limit_s=config.time_limit_s
    )
    return CellResult(
        game=config.game,
        algo=algo,
        seed=seed,
        trace=driver.trace,
        truncated=truncated,
        first_hit=first_hits(driver.trace, config.alpha_targets),
        state=driver.state_dict() if truncated else None,
    )


def _summarize(config: ExperimentConfig, cells: list[CellResult]) -> list[dict]:
    rows = []
    for a in config.alpha_targets:
        hits = [c.first_hit[a] for c in cells if c.first_hit[a] is not None]
        row: dict = {"alpha_target": a, "cells": len(cells), "hits": len(hits)}
        if hits:
            iters = [h[0] for h in hits]
            times = [h[1] for h in hits]
            n = len(hits)
            mi = sum(iters) / n
            mt = sum(times) / n
            row.update(
                mean_iteration=mi,
                std_iteration=math.sqrt(sum((x - mi) ** 2 for x in iters) / n),
                mean_time_s=mt,
                std_time_s=math.sqrt(sum((x - mt) ** 2 for x in times) / n),
            )
        rows.append(row)
    return rows


def run(config: ExperimentConfig, resume_state: dict | None = None) -> RunResult:
    """Execute every (algorithm, seed) cell of the config."""
    config.validate()
    tree = build_game(config.game)
    seeds: list[int | None] = list(config.seeds) if config.algo == "cfr-s" else [None]
    if resume_state is not None and len(seeds) != 1:
        raise ValueError("resume only supports single-cell runs")
    if config.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            cells = list(pool.map(lambda s: _run_cell(tree, config, s), seeds))
    else:
        cells = [_run_cell(tree, config, s, resume_state) for s in seeds]
    return RunResult(config=config, cells=cells, summary=_summarize(config, cells))


def _fmt(x: float) -> str:
    return repr(float(x))


def emit(result: RunResult, out_dir: str | None = None, fmt: str | None = None) -> list[str]:
    """Write per-cell trace files plus a summary; returns the written paths.

    CSV rows carry exactly the fixed header columns; JSON files mirror the
    complete records (including per-player gaps and evaluation-inclusive
    timings). With ``record_time`` off, the time columns are written as 0.0
    so identical configs yield byte-identical files.
    """
    config = result.config
    out_dir = out_dir or config.out_dir or "."
    fmt = fmt or config.fmt
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for cell in result.cells:
        base = os.path.join(out_dir, cell.name)
        if config.algo == "cfr-jr-k":
            base += f"_k{config.k}"
        if fmt == "csv":
            path = base + ".csv"
            lines = [CSV_HEADER]
            for r in cell.trace:
                t = r.time_s if config.record_time else 0.0
                lines.append(
                    f"{r.iteration},{_fmt(t)},{_fmt(r.epsilon)},{_fmt(r.alpha)},"
                    f"{_fmt(r.sw)},{_fmt(r.sw_ratio)},{r.support}"
                )
            with open(path, "w") as fh:
                fh.write("\n".join(lines) + "\n")
        else:
            path = base + ".json"
            records = []
            for r in cell.trace:
                d = r.to_jsonable()
                if not config.record_time:
                    d["time_s"] = 0.0
                    d["time_total_s"] = 0.0
                records.append(d)
            doc = {
                "game": cell.game,
                "algo": cell.algo,
                "seed": cell.seed,
                "truncated": cell.truncated,
                "records": records,
            }
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1)
                fh.write("\n")
        paths.append(path)
        if cell.truncated and cell.state is not None:
            ck = base + ".checkpoint.json"
            save_checkpoint(
                {
                    "schema": "ccelearn-checkpoint",
                    "version": CHECKPOINT_SCHEMA_VERSION,
                    "algorithm": cell.algo,
                    "game": cell.game,
                    "iteration": cell.trace[-1].iteration if cell.trace else 0,
                    "state": cell.state,
                },
                ck,
            )
            paths.append(ck)
    spath = os.path.join(out_dir, "summary.json")
    with open(spath, "w") as fh:
        json.dump({"config": config.to_dict(), "summary": result.summary}, fh, indent=1)
        fh.write("\n")
    paths.append(spath)
    return paths


def persist_instance(tree: GameTree, path: str) -> None:
    """Save a game instance to the versioned JSON format."""
    save_game(tree, path)


def load_instance(path: str) -> GameTree:
    """Load a persisted game instance."""
    return load_game(path)


def resume_run(checkpoint_path: str, config: ExperimentConfig) -> RunResult:
    """Continue a single-cell run from a checkpoint written at a time-limit stop."""
    doc = load_checkpoint(checkpoint_path)
    if doc["algorithm"] != config.algo:
        raise ValueError(
            f"checkpoint algorithm {doc['algorithm']!r} does not match config {config.algo!r}"
        )
    if doc.get("game") and doc["game"] != config.game:
        raise ValueError(f"checkpoint game {doc['game']!r} does not match config {config.game!r}")
    if config.algo == "cfr-s":
        config = replace(config, seeds=(doc["state"]["seed"],))
    return run(config, resume_state=doc["state"])
