from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from pqaoa import bench
from pqaoa.bench import ExperimentConfig, GenerateConfig, cmd_generate, cmd_report, cmd_run, cmd_transfer
from pqaoa.cli import main
from pqaoa.exceptions import ValidationError
from pqaoa.instances import GeneratorConfig, generate_vrp
from pqaoa.model import VrpInstance

QUICK = {"max_iters": 4, "final_samples": 400}


def write_instance(path: Path, n: int, A: int, seed: int) -> str:
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"inst_n{n}_A{A}_s{seed}.json"
    target.write_text(json.dumps(generate_vrp(GeneratorConfig(n, A, seed=seed)).to_json()))
    return str(target)


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def experiment(tmp_path, instances, **kw) -> ExperimentConfig:
    kw.setdefault("training", QUICK)
    kw.setdefault("output_dir", str(tmp_path / "out"))
    cfg = ExperimentConfig(instances=instances, **kw)
    cfg.validate()
    return cfg


class TestSeeds:
    def test_derive_seed_is_stable_and_distinct(self):
        assert bench.derive_seed(7, 1, 2) == bench.derive_seed(7, 1, 2)
        assert len({bench.derive_seed(7, 1, i) for i in range(100)}) == 100

    def test_parse_p_range(self):
        assert bench.parse_p_range("1-3") == [1, 2, 3]
        assert bench.parse_p_range("1,4-5") == [1, 4, 5]
        with pytest.raises(ValidationError):
            bench.parse_p_range("a-b")


class TestGenerate:
    def test_reproducible_files(self, tmp_path):
        for d in ("a", "b"):
            cmd_generate(GenerateConfig(count=5, seed=7, output_dir=str(tmp_path / d)))
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert len(names) == 6
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty(self, tmp_path):
        out = io.StringIO()
        assert cmd_generate(GenerateConfig(count=0, output_dir=str(tmp_path)), out) == 0
        assert json.loads((tmp_path / "manifest.json").read_text())["files"] == []

    def test_round_trip(self, tmp_path):
        cmd_generate(GenerateConfig(count=1, n=3, A=2, seed=1, output_dir=str(tmp_path)))
        data = json.loads((tmp_path / "instance_000.json").read_text())
        inst = VrpInstance.from_json(data)
        assert inst.to_json() == data and set(data) == {"seed", "coords", "A"}
        assert inst == generate_vrp(GeneratorConfig(3, 2, seed=data["seed"]))


class TestRun:
    def test_single_qaoa_record(self, tmp_path):
        src = write_instance(tmp_path / "inst", 2, 2, 0)
        cfg = experiment(tmp_path, [src], algorithms=["qaoa"], p_range=[1])
        assert cmd_run(cfg) == 0
        rows = read_csv(tmp_path / "out" / "results.csv")
        assert len(rows) == 1
        assert 0 < float(rows[0]["ratio"]) <= 1
        assert rows[0]["optimum_source"] == "brute-force"
        assert tuple(rows[0]) == bench.RESULT_COLUMNS
        assert (tmp_path / "out" / rows[0]["trace"]).exists()

    def test_over_cap_is_skipped(self, tmp_path):
        src = write_instance(tmp_path / "inst", 3, 2, 0)
        cfg = experiment(tmp_path, [src], algorithms=["qaoa"], p_range=[1])
        assert cmd_run(cfg) == bench.EXIT_PARTIAL
        (row,) = read_csv(tmp_path / "out" / "results.csv")
        assert row["status"] == "skipped" and "32 qubits" in row["reason"]

    def test_single_slice_runs_at_n3(self, tmp_path):
        src = write_instance(tmp_path / "inst", 3, 2, 0)
        cfg = experiment(tmp_path, [src], algorithms=["pqaoa-single"], p_range=[1])
        assert cmd_run(cfg) == 0
        (row,) = read_csv(tmp_path / "out" / "results.csv")
        assert row["qubits"] == "16" and row["num_vars"] == "32"
        assert row["optimum_source"] == "route-enum"
        assert 0 <= float(row["ratio"]) <= 1

    def test_warm_start_chain_and_replay(self, tmp_path):
        src = write_instance(tmp_path / "inst", 1, 2, 3)
        first = experiment(tmp_path, [src], p_range=[1, 2], output_dir=str(tmp_path / "r1"))
        second = experiment(tmp_path, [src], p_range=[1, 2], output_dir=str(tmp_path / "r2"))
        cmd_run(first)
        cmd_run(second)
        a = (tmp_path / "r1" / "results.csv").read_bytes()
        assert a == (tmp_path / "r2" / "results.csv").read_bytes()
        rows = read_csv(tmp_path / "r1" / "results.csv")
        assert [(r["algorithm"], r["p"], r["warm_started"]) for r in rows] == [
            ("qaoa", "1", "false"), ("qaoa", "2", "true"), ("pqaoa-multi", "1", "false"),
            ("pqaoa-multi", "2", "true"), ("pqaoa-single", "1", "false"), ("pqaoa-single", "2", "true")]
        for r in rows:
            trace = json.loads((tmp_path / "r1" / r["trace"]).read_text())
            if r["warm_started"] == "true":
                assert trace["initial_angles"][-1] == 0.0

    def test_pool_matches_sequential(self, tmp_path):
        srcs = [write_instance(tmp_path / "inst", 1, 2, s) for s in (0, 1)]
        cmd_run(experiment(tmp_path, srcs, p_range=[1], output_dir=str(tmp_path / "seq")))
        cmd_run(experiment(tmp_path, srcs, p_range=[1], output_dir=str(tmp_path / "pool"), workers=2))
        assert (tmp_path / "seq" / "results.csv").read_bytes() == (tmp_path / "pool" / "results.csv").read_bytes()

    def test_inline_instances(self, tmp_path):
        inline = generate_vrp(GeneratorConfig(1, 2, seed=0)).to_json()
        cfg = experiment(tmp_path, [inline], algorithms=["pqaoa-multi"], p_range=[1])
        assert cmd_run(cfg) == 0
        assert read_csv(tmp_path / "out" / "results.csv")[0]["instance"] == "inline_000"

    def test_config_validation(self, tmp_path):
        with pytest.raises(ValidationError):
            experiment(tmp_path, [], algorithms=[])
        with pytest.raises(ValidationError):
            experiment(tmp_path, [], algorithms=["vqe"])
        with pytest.raises(ValidationError):
            experiment(tmp_path, [], p_range=[0])
        with pytest.raises(ValidationError):
            experiment(tmp_path, [], training={"shots": 5})
        with pytest.raises(ValidationError):
            cmd_run(experiment(tmp_path, [str(tmp_path / "none_*.json")]))


class TestTransfer:
    def test_pairs_and_missing_traces(self, tmp_path):
        src = write_instance(tmp_path / "inst", 1, 2, 0)
        cfg = experiment(tmp_path, [src], p_range=[1, 2])
        cmd_run(cfg)
        (tmp_path / "out" / "traces" / "inst_n1_A2_s0__pqaoa-single__p2.json").unlink()
        assert cmd_transfer(cfg) == bench.EXIT_PARTIAL
        rows = read_csv(tmp_path / "out" / "transfer.csv")
        assert tuple(rows[0]) == bench.TRANSFER_COLUMNS
        assert len(rows) == 4
        skipped = [r for r in rows if r["status"] == "skipped"]
        assert len(skipped) == 1 and "missing trace" in skipped[0]["reason"]
        for r in rows:
            if r["status"] == "ok":
                assert r["qaoa_ratio"] and 0 <= float(r["transfer_ratio"]) <= 1

    def test_deterministic(self, tmp_path):
        src = write_instance(tmp_path / "inst", 1, 2, 0)
        cfg = experiment(tmp_path, [src], p_range=[1])
        cmd_run(cfg)
        cmd_transfer(cfg)
        first = (tmp_path / "out" / "transfer.csv").read_bytes()
        cmd_transfer(cfg)
        assert (tmp_path / "out" / "transfer.csv").read_bytes() == first


class TestReport:
    def test_empty(self, tmp_path):
        assert cmd_report(tmp_path, plots=False) == 0
        assert read_csv(tmp_path / "report" / "summary.csv") == []

    def test_aggregates(self, tmp_path):
        srcs = [write_instance(tmp_path / "inst", 1, 2, s) for s in range(3)]
        cfg = experiment(tmp_path, srcs, p_range=[1, 2])
        cmd_run(cfg)
        cmd_transfer(cfg)
        with open(tmp_path / "out" / "records.jsonl", "a") as fh:
            fh.write('{"instance": "x", "algorithm": "qaoa"\n')
            fh.write(json.dumps({"instance": "y", "algorithm": "qaoa", "p": 1, "ratio": 3.0}) + "\n")
        out = io.StringIO()
        assert cmd_report(tmp_path / "out", out, plots=False) == 0
        assert out.getvalue().count("excluded malformed record") == 2
        summary = read_csv(tmp_path / "out" / "report" / "summary.csv")
        records, _ = bench.read_records(tmp_path / "out" / "records.jsonl")
        for row in summary:
            assert float(row["min"]) <= float(row["median"]) <= float(row["max"])
            if row["algorithm"].startswith("baseline"):
                continue
            ratios = [r.ratio for r in records if r.algorithm == row["algorithm"] and r.p == int(row["p"])]
            assert int(row["count"]) == len(ratios) == 3
            assert float(row["mean"]) == pytest.approx(np.mean(ratios))
            assert float(row["median"]) == pytest.approx(np.median(ratios))
        assert {r["algorithm"] for r in summary} >= {"qaoa", "baseline-heuristic"}
        by_p = read_csv(tmp_path / "out" / "report" / "transfer_by_p.csv")
        assert {(r["algorithm"], r["p"]) for r in by_p} == {("pqaoa-multi", "1"), ("pqaoa-multi", "2"),
                                                            ("pqaoa-single", "1"), ("pqaoa-single", "2")}

    def test_figures(self, tmp_path):
        pytest.importorskip("matplotlib")
        src = write_instance(tmp_path / "inst", 1, 2, 0)
        cfg = experiment(tmp_path, [src], p_range=[1])
        cmd_run(cfg)
        cmd_transfer(cfg)
        cmd_report(tmp_path / "out")
        for name in ("ratios.png", "transfer_scatter.png", "transfer_by_p.png"):
            assert (tmp_path / "out" / "report" / name).stat().st_size > 0


class TestCli:
    def test_generate_and_run(self, tmp_path, capsys):
        assert main(["generate", "--count", "1", "-n", "1", "-A", "2", "--output", str(tmp_path / "i")]) == 0
        assert "instance_000.json" in capsys.readouterr().out
        code = main(["run", "--instances", str(tmp_path / "i" / "instance_*.json"), "--algorithms", "pqaoa-multi",
                     "--p-range", "1", "--max-iters", "3", "--final-samples", "100", "--output", str(tmp_path / "o")])
        assert code == 0
        assert main(["report", str(tmp_path / "o"), "--no-plots"]) == 0

    def test_config_file_and_overrides(self, tmp_path):
        src = write_instance(tmp_path / "inst", 1, 2, 0)
        conf = tmp_path / "exp.json"
        conf.write_text(json.dumps({"instances": [src], "algorithms": ["qaoa"], "p_range": [1],
                                    "training": {"max_iters": 2, "final_samples": 100}}))
        assert main(["run", "--config", str(conf), "--output", str(tmp_path / "o"), "--seed", "5"]) == 0
        (row,) = read_csv(tmp_path / "o" / "results.csv")
        assert row["master_seed"] == "5" and row["iterations"] == "2"

    def test_config_errors(self, tmp_path, capsys):
        assert main(["run", "--algorithms", "nope", "--instances", "x"]) == 1
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"colour": "blue"}))
        assert main(["run", "--config", str(bad)]) == 1
        assert "config error" in capsys.readouterr().err
