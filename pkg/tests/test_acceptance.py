"""Acceptance suite: one test per acceptance criterion, stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  Mid-size Monte Carlo runs use two worker processes; CSV
artifacts for the plotting frontend are written to out/acceptance/.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from tcnot.builders import (InjectedError, LogicalCircuitSpec,
                            build_logical_circuit, build_repetition_memory,
                            direction_vector_layers)
from tcnot.dem import extract_dem
from tcnot.experiments import (ExperimentConfig, LerRow, run_cell,
                               rows_to_csv, run_experiment)
from tcnot.iterative import iterative_decode
from tcnot.mwpm import brute_force_decode, decode
from tcnot.pauli import Pauli
from tcnot.sampler import sample_arrays

WORKERS = 2
OUT_DIR = Path(__file__).resolve().parent.parent / "out" / "acceptance"
_collected_rows: dict[str, list[LerRow]] = {}


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _row(experiment, d, p, n_r, num_cnots, est, seed) -> LerRow:
    return LerRow(experiment=experiment, d=d, p=p, n_r=n_r,
                  num_cnots=num_cnots, seed=seed, estimate=est)


def _save_csv(name: str, rows: list[LerRow]) -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    (OUT_DIR / name).write_text(rows_to_csv(rows))


def overlap(a, b) -> bool:
    return not (a.ci_low > b.ci_high or b.ci_low > a.ci_high)


def test_oracle_equivalence_repetition():
    """decode weight == brute-force weight on random sampled syndromes."""
    t0 = time.monotonic()
    tested_total = 0
    for d in (3, 5, 7):
        for rounds in (2, 3, 4):
            lc = build_repetition_memory(d, rounds, 0.05)
            graph = extract_dem(lc)
            dets, _ = sample_arrays(lc.circuit, 1600, seed=100 * d + rounds)
            tested = 0
            nonempty = 0
            for i in range(dets.shape[0]):
                ev = np.flatnonzero(dets[i])
                if len(ev) > 12:
                    continue  # outside the oracle's supported instance size
                a = decode(graph, ev)
                b = brute_force_decode(graph, ev)
                assert abs(a.total_weight - b.total_weight) <= 1e-9, \
                    f"d={d} rounds={rounds} shot={i}"
                tested += 1
                nonempty += bool(len(ev))
            assert tested >= 1000, f"only {tested} usable syndromes"
            assert nonempty >= 400, f"only {nonempty} nonempty syndromes"
            tested_total += tested
    elapsed = time.monotonic() - t0
    ok = elapsed < 60
    _report("oracle-equivalence", ok,
            f"{tested_total} syndromes, 9 configs, {elapsed:.1f}s")
    assert ok


def _two_patch(directions, rounds, injections):
    noisy = LogicalCircuitSpec(
        kind="repetition", distance=5, num_patches=2,
        cnot_layers=direction_vector_layers(directions), rounds_vector=rounds,
        p=0.01, noise="phenomenological")
    clean = LogicalCircuitSpec(
        kind="repetition", distance=5, num_patches=2,
        cnot_layers=direction_vector_layers(directions), rounds_vector=rounds,
        p=0.0, noise="none", injections=tuple(injections))
    graph = extract_dem(build_logical_circuit(noisy))
    lc = build_logical_circuit(clean)
    dets, obs = sample_arrays(lc.circuit, 1, seed=0)
    s0 = {k: lc.syndrome_tensor(dets[0], k, "Z") for k in range(2)}
    return lc, graph, s0, obs[0]


def test_example_1_figure_exact():
    """Single-CNOT worked example: exact frames, one pass, no logical error."""
    t0 = time.monotonic()
    lc, graph, s0, raw = _two_patch(
        ["01"], (1, 1),
        [InjectedError(0, 0, 0, Pauli.X), InjectedError(0, 0, 1, Pauli.X),
         InjectedError(1, 1, 4, Pauli.X)])
    res = iterative_decode(s0, lc.cnot_events, {0: graph, 1: graph},
                           lc.layout, "Z")
    checks = {
        "one iteration": res.iterations_used == 1,
        "converged": res.converged,
        "left B[0]={q0,q1}":
            sorted(np.flatnonzero(res.frames_b[0][0])) == [0, 1]
            and not res.frames_b[0][1:].any(),
        "right G[1]={q0,q1}":
            sorted(np.flatnonzero(res.frames_g[1][1])) == [0, 1],
        "right B[1]={q4}":
            sorted(np.flatnonzero(res.frames_b[1][1])) == [4],
        "spurious cleared":
            sorted(np.flatnonzero(res.final_syndromes[1].reshape(-1))) == [7],
        "no logical error": bool((res.predicted_flips == raw).all()),
    }
    elapsed = time.monotonic() - t0
    ok = all(checks.values()) and elapsed < 1.0
    _report("example-1-figure-exact", ok,
            f"{sum(checks.values())}/{len(checks)} checks, {elapsed:.2f}s")
    assert all(checks.values()), checks
    assert elapsed < 1.0


def test_example_2_convergence():
    """Two alternating CNOTs: the worked instance needs exactly two passes;
    sampled shots never need more."""
    t0 = time.monotonic()
    lc, graph, s0, raw = _two_patch(
        ["01", "10"], (1, 1, 1),
        [InjectedError(0, 0, 0, Pauli.X), InjectedError(0, 0, 1, Pauli.X)])
    res = iterative_decode(s0, lc.cnot_events, {0: graph, 1: graph},
                           lc.layout, "Z")
    narrative_ok = (
        res.iterations_used == 2 and res.converged
        and sorted(np.flatnonzero(res.frames_b[0][0])) == [0, 1]
        and sorted(np.flatnonzero(res.frames_g[1][1])) == [0, 1]
        and sorted(np.flatnonzero(res.frames_g[0][2])) == [0, 1]
        and not res.frames_b[1].any()
        and bool((res.predicted_flips == raw).all()))

    spec = LogicalCircuitSpec(
        kind="repetition", distance=5, num_patches=2,
        cnot_layers=direction_vector_layers(["01", "10"]),
        rounds_vector=(1, 1, 1), p=0.02, noise="phenomenological")
    lc2 = build_logical_circuit(spec)
    graph2 = extract_dem(lc2)
    dets, _ = sample_arrays(lc2.circuit, 10_000, seed=0)
    max_iters = 1
    for i in range(dets.shape[0]):
        if not dets[i].any():
            continue
        s = {k: lc2.syndrome_tensor(dets[i], k, "Z") for k in range(2)}
        r = iterative_decode(s, lc2.cnot_events, {0: graph2, 1: graph2},
                             lc2.layout, "Z")
        max_iters = max(max_iters, r.iterations_used)
    elapsed = time.monotonic() - t0
    ok = narrative_ok and max_iters <= 2 and elapsed < 60
    _report("example-2-convergence", ok,
            f"narrative={narrative_ok}, max iterations over 1e4 shots: "
            f"{max_iters}, {elapsed:.1f}s")
    assert narrative_ok
    assert max_iters <= 2
    assert elapsed < 60


def test_subthreshold_scaling_d3():
    """log-log slope of LER vs p for d=3 memory is 2.0 +/- 0.4."""
    shots = 300_000
    rows = []
    points = []
    for p in (2e-3, 4e-3, 8e-3):
        est = run_cell("MEMORY", 3, p, 3, 0, shots=shots, seed=41,
                       workers=WORKERS)
        points.append((p, est.ler))
        rows.append(_row("MEMORY", 3, p, 3, 0, est, 41))
    _collected_rows["memory"] = rows
    slope = np.polyfit([math.log(p) for p, _ in points],
                       [math.log(l) for _, l in points], 1)[0]
    ok = abs(slope - 2.0) <= 0.4
    _report("subthreshold-scaling", ok,
            f"fitted exponent {slope:.3f}, target 2.0 +/- 0.4, "
            + ", ".join(f"p={p:g}: {l:.3e}" for p, l in points))
    assert ok


def test_threshold_ordering_d3_d5():
    """At p=3e-3 the d=5 memory beats d=3 with non-overlapping CIs."""
    shots = 300_000
    ests = {}
    for d in (3, 5):
        est = run_cell("MEMORY", d, 3e-3, d, 0, shots=shots, seed=42,
                       workers=WORKERS)
        ests[d] = est
        _collected_rows.setdefault("memory", []).append(
            _row("MEMORY", d, 3e-3, d, 0, est, 42))
    separated = ests[5].ci_high < ests[3].ci_low
    ok = ests[5].ler < ests[3].ler and separated
    _report("threshold-ordering", ok,
            f"d=3: {ests[3].ler:.3e} [{ests[3].ci_low:.2e},{ests[3].ci_high:.2e}]"
            f" vs d=5: {ests[5].ler:.3e} "
            f"[{ests[5].ci_low:.2e},{ests[5].ci_high:.2e}]")
    _save_csv("memory_ler_vs_p.csv", _collected_rows["memory"])
    assert ok


def test_cnot_vs_memory_equivalence():
    """Single transversal CNOT vs matched memory: ratio in [0.5, 2] and
    overlapping 95% CIs."""
    shots = 300_000
    rows = []
    details = []
    ratio_ok = True
    ci_ok = True
    for d in (3, 5):
        a = run_cell("CNOT_CHAIN", d, 3e-3, 1, 1, shots=shots, seed=43,
                     workers=WORKERS)
        b = run_cell("CNOT_CHAIN_BASELINE", d, 3e-3, 1, 1, shots=shots,
                     seed=43, workers=WORKERS)
        rows.append(_row("CNOT_CHAIN", d, 3e-3, 1, 1, a, 43))
        rows.append(_row("CNOT_CHAIN_BASELINE", d, 3e-3, 1, 1, b, 43))
        ratio = a.ler / b.ler if b.ler else math.inf
        ratio_ok &= 0.5 <= ratio <= 2.0
        ci_ok &= overlap(a, b)
        details.append(f"d={d}: ratio {ratio:.3f}, CIs "
                       f"[{a.ci_low:.2e},{a.ci_high:.2e}] vs "
                       f"[{b.ci_low:.2e},{b.ci_high:.2e}]"
                       f" {'overlap' if overlap(a, b) else 'disjoint'}")
    _collected_rows["cnot"] = rows
    ok = ratio_ok and ci_ok
    _report("cnot-vs-memory", ok, "; ".join(details))
    assert ratio_ok, details
    assert ci_ok, details


def test_alternating_chain_behavior():
    """Two alternating CNOTs at d=3: LER stays within 2.5x of the matched
    baseline for one and two separating rounds."""
    shots = 150_000
    rows = list(_collected_rows.get("cnot", []))
    lers = {}
    ok = True
    details = []
    for n_r in (1, 2):
        a = run_cell("CNOT_CHAIN", 3, 5e-3, n_r, 2, shots=shots, seed=44,
                     workers=WORKERS)
        b = run_cell("CNOT_CHAIN_BASELINE", 3, 5e-3, n_r, 2, shots=shots,
                     seed=44, workers=WORKERS)
        rows.append(_row("CNOT_CHAIN", 3, 5e-3, n_r, 2, a, 44))
        rows.append(_row("CNOT_CHAIN_BASELINE", 3, 5e-3, n_r, 2, b, 44))
        lers[n_r] = a.ler
        ratio = a.ler / b.ler
        ok &= ratio <= 2.5
        details.append(f"n_r={n_r}: {a.ler:.3e} vs base {b.ler:.3e} "
                       f"(ratio {ratio:.2f}, max_iter {a.max_iterations})")
    trend = ("improves" if lers[2] < lers[1] else "does not improve")
    details.append(f"n_r=1 -> n_r=2 {trend} (reported, not asserted)")
    _collected_rows["cnot"] = rows
    _save_csv("cnot_chain.csv", rows)
    _report("alternating-chain", ok, "; ".join(details))
    assert ok, details


def test_y_factory_block():
    """Eight-patch CNOT block at l_max=1: within 2x of the matched memory
    baseline and exactly one iteration on every shot."""
    shots = 100_000
    a = run_cell("Y_FACTORY", 3, 3e-3, 1, 0, shots=shots, seed=45,
                 l_max=1, workers=WORKERS)
    b = run_cell("Y_FACTORY_BASELINE", 3, 3e-3, 1, 0, shots=shots, seed=45,
                 workers=WORKERS)
    rows = [_row("Y_FACTORY", 3, 3e-3, 1, 0, a, 45),
            _row("Y_FACTORY_BASELINE", 3, 3e-3, 1, 0, b, 45)]
    _save_csv("y_factory.csv", rows)
    ratio = a.ler / b.ler
    ok = ratio <= 2.0 and a.max_iterations == 1
    _report("y-factory", ok,
            f"LER {a.ler:.3e} vs baseline {b.ler:.3e} (ratio {ratio:.2f}), "
            f"max iterations {a.max_iterations}")
    assert a.max_iterations == 1
    assert ratio <= 2.0


def test_iteration_sweep_csv_for_plots():
    """LER vs iteration cap data for the convergence-style plot."""
    rows = []
    for l_max in (1, 2, 3):
        est = run_cell("CNOT_CHAIN", 3, 5e-3, 1, 2, shots=40_000, seed=46,
                       l_max=l_max, workers=WORKERS)
        rows.append(_row("CNOT_CHAIN", 3, 5e-3, 1, 2, est, 46))
    _save_csv("iteration_sweep.csv", rows)
    # monotone non-increasing up to noise; only sanity-check availability
    assert len({r.estimate.mean_iterations for r in rows}) >= 2
    _report("iteration-sweep-csv", True,
            "; ".join(f"l_max={l}: ler {r.estimate.ler:.3e}, mean_it "
                      f"{r.estimate.mean_iterations:.3f}"
                      for l, r in zip((1, 2, 3), rows)))


def test_paper_scale_numbers_documented_not_reproduced():
    """The d=9 absolute rates are covered by a documented long-run recipe,
    not reproduced at desk scale."""
    recipe = Path(__file__).resolve().parent.parent / "scripts" / \
        "paper_scale_recipe.sh"
    ok = recipe.exists() and "--d 9" in recipe.read_text()
    _report("paper-scale-declaration", ok, f"recipe at {recipe}")
    assert ok


def test_reproducibility_across_worker_counts():
    """Same seed, different worker counts: byte-identical CSV."""
    kwargs = dict(experiment="CNOT_CHAIN", d=(3,), p=(4e-3,), n_r=(1,),
                  num_cnots=2, shots=5000, seed=47, baseline=True)
    one = rows_to_csv(run_experiment(ExperimentConfig(workers=1, **kwargs)))
    two = rows_to_csv(run_experiment(ExperimentConfig(workers=2, **kwargs)))
    ok = one == two
    _report("reproducibility", ok,
            f"{len(one.splitlines()) - 1} rows compared")
    assert ok
