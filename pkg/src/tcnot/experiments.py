"""Batch experiment driver: seeded Monte Carlo logical-error-rate estimation.

An experiment cell is one (experiment, d, p, n_r) combination.  For each
cell the driver builds the circuit, extracts the memory-equivalent matching
graph, samples shots in fixed blocks, runs the iterative decoder per shot
and counts a failure whenever any patch's predicted observable flip
disagrees with the sampled one.  Aggregation is a plain sum over blocks, so
results are byte-identical for any worker count.

Experiment names:

* ``MEMORY`` — K=1 patch, ``n_r`` plays the role of the round count;
* ``CNOT_CHAIN`` — two patches, ``num_cnots`` alternating CNOTs starting
  control=0, one SE round before and after, ``n_r`` rounds between;
* ``Y_FACTORY`` — the eight-patch, three-layer CNOT block with d rounds
  before and after and ``n_r`` between layers;
* ``*_BASELINE`` — memory-equivalent of the above (same patches and total
  rounds, CNOT layers removed, plain per-patch matching).
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .builders import (LogicalCircuit, LogicalCircuitSpec,
                       build_logical_circuit, direction_vector_layers)
from .dem import MatchingGraph, extract_dem
from .iterative import IterationConfig, iterative_decode
from .mwpm import decode
from .sampler import BLOCK_SIZE, sample_block

WORKERS_ENV = "TCNOT_WORKERS"

EXPERIMENTS = ("MEMORY", "CNOT_CHAIN", "Y_FACTORY")

Y_FACTORY_LAYERS = (
    ((1, 5), (2, 6)),
    ((0, 2), (4, 6), (1, 3), (5, 7)),
    ((0, 1), (2, 3), (4, 5), (6, 7)),
)

CSV_COLUMNS = ("experiment", "d", "p", "n_r", "num_cnots", "shots", "failures",
               "ler", "ci_low", "ci_high", "mean_iterations", "seed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: tuple[int, ...]
    p: tuple[float, ...]
    n_r: tuple[int, ...] = (1,)
    num_cnots: int = 2
    shots: int = 10000
    seed: int = 0
    l_max: int | None = None
    workers: int | None = None
    baseline: bool = False
    basis: str = "Z"
    code: str = "surface"
    noise: str = "sd6"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        for name in ("d", "p", "n_r"):
            if not getattr(self, name):
                raise ConfigError(f"{name} list must be nonempty")


@dataclass(frozen=True)
class LerEstimate:
    shots: int
    failures: int
    ler: float
    ci_low: float
    ci_high: float
    mean_iterations: float
    wall_time: float
    max_iterations: int = 0
    low_statistics: bool = False


@dataclass(frozen=True)
class LerRow:
    experiment: str
    d: int
    p: float
    n_r: int
    num_cnots: int
    seed: int
    estimate: LerEstimate

    def csv_values(self) -> tuple:
        e = self.estimate
        return (self.experiment, self.d, _fmt(self.p), self.n_r,
                self.num_cnots, e.shots, e.failures, _fmt(e.ler),
                _fmt(e.ci_low), _fmt(e.ci_high), _fmt(e.mean_iterations),
                self.seed)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def estimate_ci(failures: int, shots: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if not (0 <= failures <= shots) or shots < 1:
        raise ConfigError("need 0 <= failures <= shots, shots >= 1")
    z = 1.959963984540054
    phat = failures / shots
    denom = 1.0 + z * z / shots
    center = (phat + z * z / (2 * shots)) / denom
    half = z * math.sqrt(phat * (1 - phat) / shots
                         + z * z / (4 * shots * shots)) / denom
    low = 0.0 if failures == 0 else max(center - half, 0.0)
    high = 1.0 if failures == shots else min(center + half, 1.0)
    return low, high


def cell_spec(experiment: str, d: int, p: float, n_r: int, num_cnots: int,
              basis: str = "Z", code: str = "surface",
              noise: str = "sd6") -> LogicalCircuitSpec:
    """Circuit spec for one experiment cell."""
    if experiment == "MEMORY":
        return LogicalCircuitSpec(kind=code, distance=d, num_patches=1,
                                  rounds_vector=(n_r,), basis=basis, p=p,
                                  noise=noise)
    if experiment == "CNOT_CHAIN":
        if num_cnots < 1:
            raise ConfigError("CNOT_CHAIN needs num_cnots >= 1")
        directions = ["01" if a % 2 == 0 else "10" for a in range(num_cnots)]
        rounds = (1,) + (n_r,) * (num_cnots - 1) + (1,)
        return LogicalCircuitSpec(kind=code, distance=d, num_patches=2,
                                  cnot_layers=direction_vector_layers(directions),
                                  rounds_vector=rounds, basis=basis, p=p,
                                  noise=noise)
    if experiment == "Y_FACTORY":
        rounds = (d, n_r, n_r, d)
        return LogicalCircuitSpec(kind=code, distance=d, num_patches=8,
                                  cnot_layers=Y_FACTORY_LAYERS,
                                  rounds_vector=rounds, basis=basis, p=p,
                                  noise=noise)
    if experiment.endswith("_BASELINE"):
        base = cell_spec(experiment[:-len("_BASELINE")], d, p, n_r, num_cnots,
                         basis, code, noise)
        return base.memory_equivalent()
    raise ConfigError(f"unknown experiment {experiment!r}")


# Per-process caches so worker processes build each cell once.
_logical_cache: dict = {}
_graph_cache: dict = {}


def _get_logical(key: tuple) -> tuple[LogicalCircuit, MatchingGraph]:
    logical = _logical_cache.get(key)
    if logical is None:
        experiment, d, p, n_r, num_cnots, basis, code, noise = key
        spec = cell_spec(experiment, d, p, n_r, num_cnots, basis, code, noise)
        logical = build_logical_circuit(spec)
        _logical_cache[key] = logical
    graph_key = (key[1], key[2], key[5], key[6], key[7],
                 logical.spec.total_rounds)
    graph = _graph_cache.get(graph_key)
    if graph is None:
        graph = extract_dem(logical)
        _graph_cache[graph_key] = graph
    return logical, graph


def _decode_block(key: tuple, seed: int, block: int, lo: int, hi: int,
                  l_max: int | None) -> tuple[int, int, int, int]:
    """Decode lanes [lo, hi) of one block.

    Returns (shots, failures, iteration_sum, max_iterations).
    """
    logical, graph = _get_logical(key)
    spec = logical.spec
    dets, obs = sample_block(logical.circuit, seed, block)
    dets, obs = dets[lo:hi], obs[lo:hi]
    lanes = hi - lo

    maps = [logical.detector_map[(k, spec.basis)] for k in range(spec.num_patches)]
    sliced = [dets[:, m.ravel()].reshape(lanes, *m.shape) for m in maps]
    busy = np.zeros(lanes, dtype=bool)
    for s in sliced:
        busy |= s.any(axis=(1, 2))

    cfg = IterationConfig(l_max=l_max)
    graphs = {k: graph for k in range(spec.num_patches)}
    plain_memory = not logical.cnot_events
    failures = 0
    iteration_sum = 0
    max_iterations = 0
    for i in range(lanes):
        if not busy[i]:
            iters = 1
            failed = bool(obs[i].any())
        elif plain_memory:
            # No propagation to do: one matching per patch with a nonzero
            # syndrome; its observable mask is the predicted flip.
            iters = 1
            failed = False
            for k in range(spec.num_patches):
                tensor = sliced[k][i]
                predicted = 0
                if tensor.any():
                    matching = decode(graph, np.flatnonzero(tensor.reshape(-1)))
                    predicted = matching.observable_flip
                if predicted != obs[i, k]:
                    failed = True
        else:
            s0 = {k: sliced[k][i] for k in range(spec.num_patches)}
            result = iterative_decode(s0, logical.cnot_events, graphs,
                                      logical.layout, basis=spec.basis, cfg=cfg)
            iters = result.iterations_used
            failed = bool((result.predicted_flips
                           != obs[i, :spec.num_patches]).any())
        iteration_sum += iters
        max_iterations = max(max_iterations, iters)
        if failed:
            failures += 1
    return lanes, failures, iteration_sum, max_iterations


def run_cell(experiment: str, d: int, p: float, n_r: int, num_cnots: int,
             shots: int, seed: int, l_max: int | None = None,
             workers: int = 1, basis: str = "Z", code: str = "surface",
             noise: str = "sd6") -> LerEstimate:
    key = (experiment, d, p, n_r, num_cnots, basis, code, noise)
    t0 = time.monotonic()
    tasks = []
    s = 0
    while s < shots:
        block = s // BLOCK_SIZE
        lo = s - block * BLOCK_SIZE
        hi = min(BLOCK_SIZE, shots - block * BLOCK_SIZE)
        tasks.append((key, seed, block, lo, hi, l_max))
        s = block * BLOCK_SIZE + hi

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_decode_block_star, tasks, chunksize=4))
    else:
        results = [_decode_block(*t) for t in tasks]

    total = sum(r[0] for r in results)
    failures = sum(r[1] for r in results)
    iteration_sum = sum(r[2] for r in results)
    ci_low, ci_high = estimate_ci(failures, total)
    return LerEstimate(shots=total, failures=failures, ler=failures / total,
                       ci_low=ci_low, ci_high=ci_high,
                       mean_iterations=iteration_sum / total,
                       wall_time=time.monotonic() - t0,
                       max_iterations=max(r[3] for r in results),
                       low_statistics=failures == 0)


def _decode_block_star(args):
    return _decode_block(*args)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}")
    return 1


def run_experiment(cfg: ExperimentConfig) -> list[LerRow]:
    """All cells of a config, optionally with matched memory baselines."""
    workers = cfg.workers if cfg.workers is not None else default_workers()
    rows: list[LerRow] = []
    names = [cfg.experiment]
    if cfg.baseline and cfg.experiment != "MEMORY":
        names.append(cfg.experiment + "_BASELINE")
    for d in cfg.d:
        for p in cfg.p:
            for n_r in cfg.n_r:
                for name in names:
                    est = run_cell(name, d, p, n_r, cfg.num_cnots, cfg.shots,
                                   cfg.seed, cfg.l_max, workers, cfg.basis,
                                   cfg.code, cfg.noise)
                    rows.append(LerRow(experiment=name, d=d, p=p, n_r=n_r,
                                       num_cnots=cfg.num_cnots, seed=cfg.seed,
                                       estimate=est))
    return rows


def rows_to_csv(rows: list[LerRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(v) for v in row.csv_values()))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[LerRow]) -> str:
    payload = []
    for row in rows:
        d = dict(zip(CSV_COLUMNS, row.csv_values()))
        d["wall_time"] = round(row.estimate.wall_time, 3)
        d["low_statistics"] = row.estimate.low_statistics
        payload.append(d)
    return json.dumps(payload, indent=2) + "\n"
