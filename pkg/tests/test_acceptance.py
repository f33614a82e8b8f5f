"""Acceptance criteria 1-10, one test each, at their stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal summary.
Criteria 6, 7 and 10 share one desk-scale run (10 instances, A=2, n=2,
p = 1..3, default shots and subsamples).
"""

from __future__ import annotations

import contextlib
import json
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

import pqaoa.sim as sim
from conftest import CRITERIA, FIGURE_EDGES, coupling_tags, random_qubo
from pqaoa.bench import ExperimentConfig, GenerateConfig, cmd_generate, cmd_run, cmd_transfer, read_records, \
    read_transfer, transfer_differences
from pqaoa.exceptions import SizeError
from pqaoa.instances import GeneratorConfig, generate_vrp
from pqaoa.model import VrpInstance, build_maxcut_ising, build_vrp_qubo, combine
from pqaoa.optimize import TrainingTrace
from pqaoa.pareto import pareto_indices
from pqaoa.sim import (DiagonalHamiltonian, HeaParams, QaoaParams, dense_oracle, exact_expectation, fidelity,
                       run_hea, run_qaoa, sample)
from pqaoa.slicing import InteractionGraph, connected_components, decompose, decompose_by_edge_cut, find_bridges
from pqaoa.trainer import (EnergyScorer, TrainingConfig, objective_mean_energy, trace_angles,
                           train_multi_angle_pqaoa, train_multi_objective, train_qaoa, train_single_slice_pqaoa)

SUITE_SEED = 2024
SUITE_DEPTHS = [1, 2, 3]
SUITE_BUDGET_S = 30 * 60


@contextlib.contextmanager
def criterion(num: int, title: str):
    note: dict[str, str] = {}
    try:
        yield note
    except BaseException as exc:
        CRITERIA[num] = ("FAIL", title, f"{type(exc).__name__}: {str(exc).splitlines()[0][:160]}")
        print(f"criterion {num} FAIL: {title}")
        raise
    CRITERIA[num] = ("PASS", title, note.get("detail", ""))
    print(f"criterion {num} PASS: {title} {note.get('detail', '')}")


# ---------------------------------------------------------------------------
# shared desk-scale suite


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    cmd_generate(GenerateConfig(count=10, n=2, A=2, seed=SUITE_SEED, output_dir=str(root / "instances")))
    cfg = ExperimentConfig(instances=[str(root / "instances" / "instance_*.json")], p_range=SUITE_DEPTHS,
                           output_dir=str(root / "run"), seed=SUITE_SEED)
    cfg.validate()
    start = time.perf_counter()
    code = cmd_run(cfg)
    elapsed = time.perf_counter() - start
    return {"cfg": cfg, "root": root, "run": root / "run", "code": code, "elapsed": elapsed}


def load_trace(run: Path, rel: str) -> TrainingTrace:
    return TrainingTrace.from_json(json.loads((run / rel).read_text()))


# ---------------------------------------------------------------------------


def test_criterion_01_decomposition_identity():
    with criterion(1, "decomposition identity over 50 VRP instances x 100 assignments < 1e-12") as note:
        rng = np.random.default_rng(1)
        start = time.perf_counter()
        worst = 0.0
        for i in range(50):
            A, n = int(rng.choice([2, 3])), int(rng.choice([1, 2, 3]))
            m = build_vrp_qubo(generate_vrp(GeneratorConfig(n, A, seed=i)))
            d = decompose(m, coupling_tags(m))
            bits = rng.integers(0, 2, size=(100, m.num_vars))
            parts = sum(s.energies(bits[:, list(idx)]) for s, idx in zip(d.slices, d.index_maps))
            err = np.abs(parts + d.residual.energies(bits) - m.energies(bits)).max()
            worst = max(worst, float(err))
        elapsed = time.perf_counter() - start
        note["detail"] = f"max error {worst:.1e}, {elapsed:.2f} s"
        assert worst < 1e-12
        assert elapsed < 10


def test_criterion_02_simulator_matches_dense_oracle():
    with criterion(2, "run_qaoa / run_hea vs dense oracle, fidelity >= 1 - 1e-10") as note:
        rng = np.random.default_rng(2)
        start = time.perf_counter()
        worst = 1.0
        for _ in range(50):
            n, p = int(rng.integers(1, 9)), int(rng.integers(1, 4))
            m = random_qubo(rng, n)
            params = QaoaParams(rng.uniform(-np.pi, np.pi, p), rng.uniform(-np.pi, np.pi, p))
            worst = min(worst, fidelity(run_qaoa(DiagonalHamiltonian.from_model(m), params), dense_oracle(m, params)))
        for _ in range(50):
            n, L = int(rng.integers(1, 4)), int(rng.integers(1, 3))
            params = HeaParams(rng.uniform(-np.pi, np.pi, (L, n)))
            worst = min(worst, fidelity(run_hea(n, params), dense_oracle(None, params, "hea")))
        elapsed = time.perf_counter() - start
        note["detail"] = f"min fidelity 1 - {1 - worst:.1e}, {elapsed:.2f} s"
        assert worst >= 1 - 1e-10
        assert elapsed < 60


def test_criterion_03_sampled_objective_consistency():
    with criterion(3, "sampled mean energy within 5 standard errors of the exact expectation") as note:
        rng = np.random.default_rng(3)
        worst = 0.0
        for j in range(10):
            m = random_qubo(rng, 10)
            H = DiagonalHamiltonian.from_model(m)
            state = run_qaoa(H, QaoaParams(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)))
            draws = sample(state, 100_000, j)
            energies = EnergyScorer(m, H.energies)(draws)
            mean = objective_mean_energy(draws, m)
            stderr = np.sqrt(np.average((energies - mean) ** 2, weights=draws.counts) / draws.shots)
            worst = max(worst, abs(mean - exact_expectation(state, H)) / stderr)
        note["detail"] = f"largest deviation {worst:.2f} standard errors"
        assert worst < 5


def test_criterion_04_multi_angle_parameter_count():
    with criterion(4, "multi-angle pQAOA exposes 2kp parameters for k = 2, p = 1..6") as note:
        m = build_vrp_qubo(generate_vrp(GeneratorConfig(1, 2, seed=0)))
        d = decompose(m, coupling_tags(m))
        assert d.k == 2
        counts = []
        for p in range(1, 7):
            trace = train_multi_angle_pqaoa(d, p, TrainingConfig(max_iters=1, shots_per_eval=100))
            counts.append(len(trace.best_angles))
            assert trace.meta["num_params"] == len(trace.best_angles) == len(trace.initial_angles) == 2 * 2 * p
        note["detail"] = f"parameter counts {counts}"


def test_criterion_05_single_slice_resources(monkeypatch, tmp_path):
    with criterion(5, "single-slice pQAOA at A=2, n=3 simulates 16 qubits; 32-qubit full QAOA is skipped") as note:
        inst = generate_vrp(GeneratorConfig(3, 2, seed=0))
        m = build_vrp_qubo(inst)
        d = decompose(m, coupling_tags(m))
        widths = []
        real = sim.init_plus

        def recording(n):
            widths.append(n)
            return real(n)

        monkeypatch.setattr(sim, "init_plus", recording)
        trace = train_single_slice_pqaoa(d, 1, TrainingConfig(max_iters=5))
        monkeypatch.undo()
        assert m.num_vars == 32 and trace.meta["qubits"] == 16
        assert widths and set(widths) == {16}
        with pytest.raises(SizeError):
            train_qaoa(m, 1, TrainingConfig())
        src = tmp_path / "n3.json"
        src.write_text(json.dumps(inst.to_json()))
        cfg = ExperimentConfig(instances=[str(src)], algorithms=["qaoa"], p_range=[1], output_dir=str(tmp_path))
        assert cmd_run(cfg) == 2
        (rec,), _ = read_records(tmp_path / "records.jsonl")
        assert rec.status == "skipped" and "32 qubits" in rec.reason
        note["detail"] = (f"{len(widths)} statevectors, all 16 qubits; full QAOA: {rec.reason}; "
                          "n=3 full-QAOA figures are not reproduced")


def test_criterion_06_desk_scale_experiment(suite):
    with criterion(6, "desk-scale suite: monotone traces, exact warm starts, baseline >= quantum") as note:
        run = suite["run"]
        records, bad = read_records(run / "records.jsonl")
        assert not bad
        assert suite["code"] == 0
        assert len(records) == 10 * 3 * len(SUITE_DEPTHS)
        assert all(r.status == "ok" for r in records)
        assert {r.shots_per_eval for r in records if r.p == 1} == {100}
        assert {r.subsamples for r in records if r.algorithm != "qaoa"} == {100}
        assert {r.final_samples for r in records} == {10_000}

        # (a) best-so-far objective never increases
        traces = {(r.instance, r.algorithm, r.p): load_trace(run, r.trace) for r in records}
        for trace in traces.values():
            best = trace.best_so_far()
            assert np.all(np.diff(best) <= 0)
            assert best[-1] == trace.best_objective

        # (b) the warm start of depth p+1 is the depth-p optimum plus an identity layer
        worst_fid, worst_energy = 1.0, 0.0
        models = {}
        for (inst, alg, p), trace in traces.items():
            if p == 1:
                continue
            prev = traces[(inst, alg, p - 1)]
            expected = trace_angles(prev).extended().flatten()
            assert np.array_equal(np.array(trace.initial_angles), expected)
            if inst not in models:
                spec = json.loads((suite["root"] / "instances" / f"{inst}.json").read_text())
                model = build_vrp_qubo(VrpInstance.from_json(spec))
                d = decompose(model, coupling_tags(model))
                models[inst] = (DiagonalHamiltonian.from_model(model),
                                [DiagonalHamiltonian.from_model(s) for s in d.slices])
            full, slices = models[inst]
            before, after = trace_angles(prev), trace_angles(prev).extended()
            circuits = [(full, 0)] if alg == "qaoa" else [(slices[a], a) for a in range(before.k)]
            for H, a in circuits:
                s0, s1 = run_qaoa(H, before.params(a)), run_qaoa(H, after.params(a))
                worst_fid = min(worst_fid, fidelity(s0, s1))
                worst_energy = max(worst_energy, abs(exact_expectation(s1, H) - exact_expectation(s0, H)))
        assert worst_fid >= 1 - 1e-12 and worst_energy <= 1e-9

        # (c) the classical baseline is at least as good on average as every quantum algorithm
        baseline = {r.instance: r.baseline_heuristic_ratio for r in records}
        base_mean = statistics.fmean(baseline.values())
        lines = [f"heuristic mean {base_mean:.3f}"]
        for alg in ("qaoa", "pqaoa-multi", "pqaoa-single"):
            ratios = [r.ratio for r in records if r.algorithm == alg]
            q = np.percentile(ratios, [0, 25, 50, 75, 100])
            lines.append(f"{alg} mean {np.mean(ratios):.3f} [min {q[0]:.2f} q1 {q[1]:.2f} med {q[2]:.2f} "
                         f"q3 {q[3]:.2f} max {q[4]:.2f}]")
            print(lines[-1])
            assert base_mean >= np.mean(ratios)
        assert suite["elapsed"] < SUITE_BUDGET_S
        note["detail"] = "; ".join(lines) + f"; identity-layer fidelity 1 - {1 - worst_fid:.1e}; " \
                                            f"run {suite['elapsed']:.0f} s"


def test_criterion_07_transfer(suite):
    with criterion(7, "transfer ratios for both pQAOA modes, per-p mean |difference| to direct QAOA") as note:
        run = suite["run"]
        assert cmd_transfer(suite["cfg"]) == 0
        first = (run / "transfer.csv").read_bytes()
        assert cmd_transfer(suite["cfg"]) == 0
        assert (run / "transfer.csv").read_bytes() == first
        rows, bad = read_transfer(run / "transfer.csv")
        assert not bad and len(rows) == 10 * 2 * len(SUITE_DEPTHS)
        diffs = transfer_differences(rows)
        assert {(a, p) for a, p, _, _ in diffs} == {(a, p) for a in ("pqaoa-multi", "pqaoa-single")
                                                    for p in SUITE_DEPTHS}
        means = {}
        for r in rows:
            means.setdefault((r.algorithm, r.p), []).append(r.transfer_ratio)
        note["detail"] = "; ".join(f"{a} p={p}: |diff| {dv:.3f}, transfer mean {statistics.fmean(means[(a, p)]):.3f}"
                                   for a, p, dv, _ in diffs)


def test_criterion_08_bridges_and_edge_cut():
    with criterion(8, "figure graph bridges and the (A, B) edge cut") as note:
        g = InteractionGraph(7, tuple(FIGURE_EDGES))
        bridges = find_bridges(g)
        by_removal = sorted(e for e in g.edges if len(connected_components(g.without([e]))) > 1)
        assert bridges == by_removal == [(0, 3), (5, 6)]
        d = decompose_by_edge_cut(build_maxcut_ising(FIGURE_EDGES), [(0, 3)])
        sizes = sorted(s.num_vars for s in d.slices)
        terms = len(d.residual.quadratic) + len(d.residual.linear)
        assert sizes == [3, 4] and terms == 1
        note["detail"] = f"bridges {bridges}, slice sizes {sizes}, residual terms {terms}"


def test_criterion_09_pareto_and_multi_objective():
    with criterion(9, "Pareto front vs O(n^2) oracle; one-objective training equals scalar training") as note:
        rng = np.random.default_rng(9)
        pts = [tuple(v) for v in rng.integers(0, 20, size=(200, 3))]
        oracle = [i for i, a in enumerate(pts)
                  if not any(all(b[k] <= a[k] for k in range(3)) and any(b[k] < a[k] for k in range(3)) for b in pts)]
        assert pareto_indices(pts) == oracle

        m = build_vrp_qubo(generate_vrp(GeneratorConfig(1, 2, seed=9)))
        constraints = m.restrict(m.select_tags(penalty=True))
        travel = m.restrict(m.select_tags(penalty=False))
        cfg = TrainingConfig(seed=4, max_iters=30)
        a = train_multi_objective(constraints, [travel], 1, cfg)
        b = train_multi_objective(constraints, [travel], 1, cfg)
        assert a.dumps() == b.dumps()
        scalar = train_qaoa(constraints, 1, cfg, score_model=combine(constraints, travel))
        assert np.allclose([it.objective for it in a.iterations], [it.objective for it in scalar.iterations],
                           rtol=0, atol=1e-12)
        assert [it.angles for it in a.iterations] == [it.angles for it in scalar.iterations]
        note["detail"] = f"front of {len(oracle)} / 200 points; {len(a.iterations)} identical iterations"


def test_criterion_10_replay_is_byte_identical(suite, tmp_path):
    with criterion(10, "cmd_run replay with the same master seed gives byte-identical CSV") as note:
        cfg = suite["cfg"]
        paths = sorted((suite["root"] / "instances").glob("instance_*.json"))[:2]
        outputs = []
        for name in ("a", "b"):
            sub = ExperimentConfig(instances=[str(p) for p in paths], p_range=[1, 2], output_dir=str(tmp_path / name),
                                   seed=cfg.seed)
            cmd_run(sub)
            outputs.append((tmp_path / name / "results.csv").read_bytes())
        assert outputs[0] == outputs[1]
        # the same (instance, algorithm, p) rows appear verbatim in the full suite's CSV
        full = (suite["run"] / "results.csv").read_text().splitlines()
        sub_rows = outputs[0].decode().splitlines()[1:]
        assert set(sub_rows) <= set(full)
        note["detail"] = f"{len(sub_rows)} rows identical across two runs and within the full suite"
