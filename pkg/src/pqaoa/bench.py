"""Reproducible experiment sweeps: instance generation, training, transfer, reports.

Every random stream is derived from one master seed through
:func:`derive_seed`, keyed by ``(purpose, instance, algorithm, p)``, so any
record can be replayed on its own. Tasks may run in a process pool; results
are sorted before they are written, so output files do not depend on
scheduling.

Output layout of a run directory::

    records.jsonl    one JSON object per (instance, algorithm, p), with wall time
    results.csv      the same records without wall time, columns ``RESULT_COLUMNS``
    traces/          one TrainingTrace JSON per trained record
    transfer.csv     written by ``transfer``, columns ``TRANSFER_COLUMNS``
    report/          written by ``report``: summary and plot-data CSVs, figures
"""

from __future__ import annotations

import csv
import glob
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .exceptions import PqaoaError, ValidationError
from .instances import (GeneratorConfig, feasible_ratio, generate_vrp, heuristic_baseline, optimal_reference,
                        route_enum_optimal)
from .model import VrpInstance, build_vrp_qubo
from .optimize import TrainingTrace
from .slicing import decompose, slices_identical
from .trainer import (TrainingConfig, final_solution, trace_angles, train_multi_angle_pqaoa, train_qaoa,
                      train_single_slice_pqaoa, transfer_evaluate)

ALGORITHMS = ("qaoa", "pqaoa-multi", "pqaoa-single")
SLICED = ("pqaoa-multi", "pqaoa-single")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

# seed purposes
_INSTANCE, _TRAIN, _FINAL, _BASELINE, _TRANSFER = range(5)

RESULT_COLUMNS = (
    "instance", "algorithm", "p", "status", "reason",
    "n", "A", "num_vars", "qubits", "num_params",
    "master_seed", "train_seed", "final_seed", "warm_started",
    "shots_per_eval", "subsamples", "shots_used", "evaluations", "iterations", "converged",
    "initial_objective", "best_objective",
    "final_samples", "best_energy", "best_feasible_energy", "feasible_shots",
    "optimum", "optimum_source", "ratio",
    "baseline_heuristic_energy", "baseline_heuristic_ratio", "baseline_route_enum_ratio",
    "trace",
)

TRANSFER_COLUMNS = (
    "instance", "algorithm", "p", "status", "reason", "transfer_seed",
    "qaoa_ratio", "transfer_ratio", "transfer_source", "transfer_best_energy", "optimum", "optimum_source",
)

SUMMARY_COLUMNS = ("algorithm", "p", "count", "mean", "median", "q1", "q3", "min", "max")


def derive_seed(master: int, *keys: int) -> int:
    """Counter-based child seed: the same keys always give the same 32-bit value."""
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# configuration


@dataclass
class GenerateConfig:
    count: int = 50
    n: int = 2
    A: int = 2
    seed: int = 0
    grid_half: int = 50
    sigma: float = 20.0
    output_dir: str = "instances"

    def validate(self):
        if self.count < 0:
            raise ValidationError("count must be >= 0")
        GeneratorConfig(self.n, self.A, self.grid_half, self.sigma)


@dataclass
class ExperimentConfig:
    """One sweep over instances, algorithms and depths.

    ``instances`` holds file globs (relative to the working directory) or
    inline instance objects ``{"coords": ..., "A": ..., "seed": ...}``.
    """

    instances: list = field(default_factory=list)
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    p_range: list[int] = field(default_factory=lambda: list(range(1, 7)))
    training: dict[str, Any] = field(default_factory=dict)
    output_dir: str = "results"
    seed: int = 0
    warm_start: bool = True
    workers: int = 1

    def validate(self):
        if not self.algorithms:
            raise ValidationError("algorithm set is empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValidationError(f"unknown algorithms {sorted(unknown)}; choose from {list(ALGORITHMS)}")
        if not self.p_range or any(int(p) < 1 for p in self.p_range):
            raise ValidationError("p_range must be a non-empty list of depths >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        self.training_config()

    def training_config(self, seed: int = 0) -> TrainingConfig:
        known = {f.name for f in fields(TrainingConfig)}
        unknown = set(self.training) - known
        if unknown:
            raise ValidationError(f"unknown training keys {sorted(unknown)}")
        return TrainingConfig(**{**self.training, "seed": seed})

    @property
    def depths(self) -> list[int]:
        return sorted({int(p) for p in self.p_range})


def load_config(cls, path: str | os.PathLike | None = None, overrides: dict | None = None):
    """Build ``cls`` from a JSON file and flag overrides (``None`` values ignored)."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "training":
            data["training"] = {**data.get("training", {}), **value}
        else:
            data[key] = value
    cfg = cls(**data)
    cfg.validate()
    return cfg


def parse_p_range(text: str) -> list[int]:
    """``"1-3"`` or ``"1,2,5"`` to a list of depths."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                out.append(int(part))
    except ValueError as exc:
        raise ValidationError(f"bad p range {text!r}") from exc
    return out


# ---------------------------------------------------------------------------
# generate


def cmd_generate(cfg: GenerateConfig, out=None) -> int:
    """Write ``count`` instance files plus ``manifest.json``; print a summary table."""
    cfg.validate()
    out = out or io.StringIO()
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    files = []
    rows = []
    for i in range(cfg.count):
        seed = derive_seed(cfg.seed, _INSTANCE, i)
        inst = generate_vrp(GeneratorConfig(cfg.n, cfg.A, cfg.grid_half, cfg.sigma, seed))
        name = f"instance_{i:03d}.json"
        (root / name).write_text(json.dumps(inst.to_json(), sort_keys=True) + "\n")
        files.append(name)
        rows.append((name, seed, inst.W, route_enum_optimal(inst).cost if cfg.n <= 8 else math.nan))
    manifest = {**asdict(cfg), "files": files}
    manifest.pop("output_dir")
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"{'file':<20} {'seed':>10} {'W':>9} {'opt cost':>9}", file=out)
    for name, seed, W, cost in rows:
        print(f"{name:<20} {seed:>10} {W:>9.3f} {cost:>9.4f}", file=out)
    print(f"{len(files)} instance(s) written to {root}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# run


@dataclass
class ExperimentRecord:
    instance: str
    algorithm: str
    p: int
    status: str = "ok"
    reason: str = ""
    n: int = 0
    A: int = 0
    num_vars: int = 0
    qubits: int | None = None
    num_params: int | None = None
    master_seed: int = 0
    train_seed: int | None = None
    final_seed: int | None = None
    warm_started: bool = False
    shots_per_eval: int | None = None
    subsamples: int | None = None
    shots_used: int | None = None
    evaluations: int | None = None
    iterations: int | None = None
    converged: bool | None = None
    initial_objective: float | None = None
    best_objective: float | None = None
    final_samples: int | None = None
    best_energy: float | None = None
    best_feasible_energy: float | None = None
    feasible_shots: int | None = None
    optimum: float | None = None
    optimum_source: str = ""
    ratio: float | None = None
    baseline_heuristic_energy: float | None = None
    baseline_heuristic_ratio: float | None = None
    baseline_route_enum_ratio: float | None = None
    trace: str = ""
    wall_time: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.instance, ALGORITHMS.index(self.algorithm), self.p)

    def row(self) -> list[str]:
        return [_cell(getattr(self, c)) for c in RESULT_COLUMNS]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_instances(specs: Sequence) -> list[tuple[str, VrpInstance]]:
    """Resolve globs and inline objects to ``(id, instance)`` pairs, sorted by id."""
    found: dict[str, VrpInstance] = {}
    for j, spec in enumerate(specs):
        if isinstance(spec, dict):
            found[f"inline_{j:03d}"] = VrpInstance.from_json(spec)
            continue
        paths = sorted(glob.glob(str(spec)))
        if not paths:
            raise ValidationError(f"no instance files match {spec!r}")
        for path in paths:
            if Path(path).name == "manifest.json":
                continue
            try:
                found[Path(path).stem] = VrpInstance.from_json(json.loads(Path(path).read_text()))
            except (OSError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"cannot load instance {path}: {exc}") from exc
    if not found:
        raise ValidationError("no instances given")
    return sorted(found.items())


@dataclass
class _Reference:
    optimum: float
    source: str
    heuristic_energy: float
    heuristic_ratio: float
    route_enum_ratio: float | None


def _reference(inst: VrpInstance, model, master: int, idx: int, max_vars: int) -> _Reference:
    optimum, source = optimal_reference(inst, model, max_vars)
    heuristic = heuristic_baseline(inst, derive_seed(master, _BASELINE, idx))
    enum_ratio = None
    if inst.n <= 8:
        enum_ratio = feasible_ratio(route_enum_optimal(inst).qubo_energy, optimum)
    return _Reference(optimum, source, heuristic.qubo_energy,
                      feasible_ratio(heuristic.qubo_energy, optimum), enum_ratio)


def _trace_name(instance_id: str, algorithm: str, p: int) -> str:
    return f"{instance_id}__{algorithm}__p{p}.json"


def _skip_reason(algorithm: str, model, d, cap: int) -> str:
    if algorithm == "qaoa":
        if model.num_vars > cap:
            return f"full model needs {model.num_vars} qubits, above the simulator cap of {cap}"
        return ""
    widest = max(s.num_vars for s in d.slices)
    if widest > cap:
        return f"largest slice needs {widest} qubits, above the simulator cap of {cap}"
    if algorithm == "pqaoa-single" and not slices_identical(d):
        return "slices are not identical"
    return ""


def _run_chain(task) -> list[ExperimentRecord]:
    """All depths of one (instance, algorithm) pair, warm-starting each from the last."""
    cfg, idx, instance_id, inst, algorithm, trace_dir = task
    model = build_vrp_qubo(inst)
    d = decompose(model, [t for t in model.tags if t.kind == "coupling"])
    base_cfg = cfg.training_config()
    ref = _reference(inst, model, cfg.seed, idx, base_cfg.max_qubits)
    alg = ALGORITHMS.index(algorithm)
    reason = _skip_reason(algorithm, model, d, base_cfg.max_qubits)
    records = []
    previous = None
    for p in cfg.depths:
        rec = ExperimentRecord(instance_id, algorithm, p, n=inst.n, A=inst.A, num_vars=model.num_vars,
                               master_seed=cfg.seed, optimum=ref.optimum, optimum_source=ref.source,
                               baseline_heuristic_energy=ref.heuristic_energy,
                               baseline_heuristic_ratio=ref.heuristic_ratio,
                               baseline_route_enum_ratio=ref.route_enum_ratio)
        records.append(rec)
        if reason:
            rec.status, rec.reason = "skipped", reason
            continue
        start = time.perf_counter()
        rec.train_seed = derive_seed(cfg.seed, _TRAIN, idx, alg, p)
        rec.final_seed = derive_seed(cfg.seed, _FINAL, idx, alg, p)
        tcfg = cfg.training_config(rec.train_seed)
        initial = None
        if cfg.warm_start and previous is not None and previous[0] == p - 1:
            initial = trace_angles(previous[1]).extended().flatten()
            rec.warm_started = True
        try:
            if algorithm == "qaoa":
                trace = train_qaoa(model, p, tcfg, initial)
                target = model
            elif algorithm == "pqaoa-multi":
                trace = train_multi_angle_pqaoa(d, p, tcfg, initial)
                target = d
            else:
                trace = train_single_slice_pqaoa(d, p, tcfg, initial)
                target = d
            sol = final_solution(target, trace, tcfg, rec.final_seed)
        except PqaoaError as exc:
            rec.status, rec.reason = "failed", f"{type(exc).__name__}: {exc}"
            previous = None
            continue
        previous = (p, trace)
        name = _trace_name(instance_id, algorithm, p)
        (trace_dir / name).write_text(trace.dumps() + "\n")
        meta = trace.meta
        rec.qubits, rec.num_params = meta["qubits"], meta["num_params"]
        rec.shots_per_eval, rec.subsamples = meta["shots_per_eval"], meta.get("subsamples")
        rec.shots_used, rec.evaluations = trace.shots_used, trace.evaluations
        rec.iterations, rec.converged = len(trace.iterations), trace.converged
        rec.initial_objective, rec.best_objective = trace.initial_objective, trace.best_objective
        rec.final_samples, rec.best_energy = sol.shots, sol.best_energy
        rec.best_feasible_energy, rec.feasible_shots = sol.best_feasible_energy, sol.feasible_shots
        rec.ratio = feasible_ratio(sol.best_feasible_energy, ref.optimum)
        rec.trace = f"traces/{name}"
        rec.wall_time = time.perf_counter() - start
    return records


def _map(fn, tasks: list, workers: int) -> list:
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[str]]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def cmd_run(cfg: ExperimentConfig, out=None) -> int:
    """Train every (instance, algorithm, p) and write records, CSV and traces.

    Returns 2 if any record was skipped or failed, else 0.
    """
    out = out or io.StringIO()
    instances = load_instances(cfg.instances)
    root = Path(cfg.output_dir)
    trace_dir = root / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, idx, iid, inst, alg, trace_dir)
             for idx, (iid, inst) in enumerate(instances) for alg in cfg.algorithms]
    records = sorted((r for chain in _map(_run_chain, tasks, cfg.workers) for r in chain),
                     key=lambda r: r.key)
    with open(root / "records.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")
    write_csv(root / "results.csv", RESULT_COLUMNS, (r.row() for r in records))
    not_ok = [r for r in records if r.status != "ok"]
    for r in records:
        ratio = "-" if r.ratio is None else f"{r.ratio:.4f}"
        note = f"  [{r.status}: {r.reason}]" if r.status != "ok" else ""
        print(f"{r.instance:<16} {r.algorithm:<13} p={r.p}  ratio={ratio}{note}", file=out)
    print(f"{len(records)} record(s), {len(not_ok)} skipped or failed; output in {root}", file=out)
    return EXIT_PARTIAL if not_ok else EXIT_OK


def read_records(path: Path) -> tuple[list[ExperimentRecord], list[str]]:
    """Parse ``records.jsonl``; malformed lines are returned as messages, not raised."""
    good, bad = [], []
    names = {f.name for f in fields(ExperimentRecord)}
    if not path.exists():
        return good, bad
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            if not isinstance(data, dict) or set(data) - names:
                raise ValueError("unexpected fields")
            rec = ExperimentRecord(**data)
            if rec.algorithm not in ALGORITHMS or not isinstance(rec.p, int):
                raise ValueError(f"bad algorithm or depth {rec.algorithm!r}, {rec.p!r}")
            if rec.status == "ok" and not (isinstance(rec.ratio, (int, float)) and 0 <= rec.ratio <= 1):
                raise ValueError(f"ratio {rec.ratio!r} outside [0, 1]")
            good.append(rec)
        except (ValueError, TypeError) as exc:
            bad.append(f"{path.name}:{lineno}: {exc}")
    return good, bad


# ---------------------------------------------------------------------------
# transfer


@dataclass
class TransferRecord:
    instance: str
    algorithm: str
    p: int
    status: str = "ok"
    reason: str = ""
    transfer_seed: int | None = None
    qaoa_ratio: float | None = None
    transfer_ratio: float | None = None
    transfer_source: str = ""
    transfer_best_energy: float | None = None
    optimum: float | None = None
    optimum_source: str = ""

    def row(self) -> list[str]:
        return [_cell(getattr(self, c)) for c in TRANSFER_COLUMNS]


def _transfer_chain(task) -> list[TransferRecord]:
    cfg, idx, instance_id, inst, algorithm, root, qaoa_ratios = task
    model = build_vrp_qubo(inst)
    tcfg = cfg.training_config()
    optimum, source = optimal_reference(inst, model, tcfg.max_qubits)
    alg = ALGORITHMS.index(algorithm)
    out = []
    for p in cfg.depths:
        rec = TransferRecord(instance_id, algorithm, p, qaoa_ratio=qaoa_ratios.get((instance_id, p)),
                             optimum=optimum, optimum_source=source)
        out.append(rec)
        path = root / "traces" / _trace_name(instance_id, algorithm, p)
        if not path.exists():
            rec.status, rec.reason = "skipped", f"missing trace {path.name}"
            continue
        rec.transfer_seed = derive_seed(cfg.seed, _TRANSFER, idx, alg, p)
        try:
            trace = TrainingTrace.from_json(json.loads(path.read_text()))
            res = transfer_evaluate(model, trace, p, tcfg.final_samples, rec.transfer_seed, optimum,
                                    tcfg.max_qubits)
        except (PqaoaError, ValueError, KeyError) as exc:
            rec.status, rec.reason = "skipped", f"{type(exc).__name__}: {exc}"
            continue
        best = max(res.sources, key=lambda s: (s.ratio, -s.best_energy))
        rec.transfer_ratio, rec.transfer_source = best.ratio, best.source
        rec.transfer_best_energy = best.best_energy
    return out


def cmd_transfer(cfg: ExperimentConfig, out=None) -> int:
    """Run the full circuit with angles from sliced-mode traces of a previous ``run``.

    Each row pairs the transferred ratio with the direct QAOA ratio of the same
    instance and depth, when that record exists. Among the candidate angle
    sets of a multi-angle trace the one with the highest ratio is reported.
    """
    out = out or io.StringIO()
    instances = load_instances(cfg.instances)
    root = Path(cfg.output_dir)
    records, _ = read_records(root / "records.jsonl")
    qaoa_ratios = {(r.instance, r.p): r.ratio for r in records if r.algorithm == "qaoa" and r.status == "ok"}
    algorithms = [a for a in cfg.algorithms if a in SLICED]
    tasks = [(cfg, idx, iid, inst, alg, root, qaoa_ratios)
             for idx, (iid, inst) in enumerate(instances) for alg in algorithms]
    rows = sorted((r for chain in _map(_transfer_chain, tasks, cfg.workers) for r in chain),
                  key=lambda r: (r.instance, ALGORITHMS.index(r.algorithm), r.p))
    write_csv(root / "transfer.csv", TRANSFER_COLUMNS, (r.row() for r in rows))
    for alg, p, diff, count in transfer_differences(rows):
        print(f"{alg:<13} p={p}  mean |transfer - qaoa| = {diff:.4f} over {count} instance(s)", file=out)
    skipped = [r for r in rows if r.status != "ok"]
    print(f"{len(rows)} transfer row(s), {len(skipped)} skipped; output in {root / 'transfer.csv'}", file=out)
    return EXIT_PARTIAL if skipped else EXIT_OK


def transfer_differences(rows: Sequence[TransferRecord]) -> list[tuple[str, int, float, int]]:
    """Mean absolute difference between transferred and direct ratios per (algorithm, p)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        if r.status == "ok" and r.qaoa_ratio is not None and r.transfer_ratio is not None:
            groups.setdefault((r.algorithm, r.p), []).append(abs(r.transfer_ratio - r.qaoa_ratio))
    return [(a, p, float(np.mean(v)), len(v))
            for (a, p), v in sorted(groups.items(), key=lambda kv: (ALGORITHMS.index(kv[0][0]), kv[0][1]))]


def read_transfer(path: Path) -> tuple[list[TransferRecord], list[str]]:
    rows, bad = [], []
    if not path.exists():
        return rows, bad
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.DictReader(fh), 2):
            try:
                rows.append(TransferRecord(
                    raw["instance"], raw["algorithm"], int(raw["p"]), raw["status"], raw["reason"],
                    int(raw["transfer_seed"]) if raw["transfer_seed"] else None,
                    float(raw["qaoa_ratio"]) if raw["qaoa_ratio"] else None,
                    float(raw["transfer_ratio"]) if raw["transfer_ratio"] else None,
                    raw["transfer_source"],
                    float(raw["transfer_best_energy"]) if raw["transfer_best_energy"] else None,
                    float(raw["optimum"]) if raw["optimum"] else None, raw["optimum_source"]))
            except (KeyError, ValueError, TypeError) as exc:
                bad.append(f"{path.name}:{lineno}: {exc}")
    return rows, bad


# ---------------------------------------------------------------------------
# report


def summarize(values: Sequence[float]) -> dict[str, float]:
    """Count, mean, median, quartiles and range of a non-empty sample."""
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"count": int(v.size), "mean": float(v.mean()), "median": float(med), "q1": float(q1),
            "q3": float(q3), "min": float(v.min()), "max": float(v.max())}


def summary_table(records: Sequence[ExperimentRecord]) -> list[dict]:
    """Per-(algorithm, p) ratio statistics, plus one row per baseline (``p = 0``)."""
    groups: dict[tuple[str, int], list[float]] = {}
    baselines: dict[str, dict[str, float]] = {"baseline-heuristic": {}, "baseline-route-enum": {}}
    for r in records:
        if r.status == "ok" and r.ratio is not None:
            groups.setdefault((r.algorithm, r.p), []).append(r.ratio)
        if r.baseline_heuristic_ratio is not None:
            baselines["baseline-heuristic"][r.instance] = r.baseline_heuristic_ratio
        if r.baseline_route_enum_ratio is not None:
            baselines["baseline-route-enum"][r.instance] = r.baseline_route_enum_ratio
    rows = [{"algorithm": a, "p": p, **summarize(v)}
            for (a, p), v in sorted(groups.items(), key=lambda kv: (ALGORITHMS.index(kv[0][0]), kv[0][1]))]
    for name, per_instance in baselines.items():
        if per_instance:
            rows.append({"algorithm": name, "p": 0, **summarize([per_instance[k] for k in sorted(per_instance)])})
    return rows


def cmd_report(run_dir: str | os.PathLike, out=None, plots: bool = True) -> int:
    """Aggregate a run directory into ``report/``; malformed records are listed and excluded."""
    out = out or io.StringIO()
    root = Path(run_dir)
    report = root / "report"
    report.mkdir(parents=True, exist_ok=True)
    records, bad = read_records(root / "records.jsonl")
    transfer, bad_t = read_transfer(root / "transfer.csv")
    for msg in bad + bad_t:
        print(f"excluded malformed record {msg}", file=out)

    summary = summary_table(records)
    write_csv(report / "summary.csv", SUMMARY_COLUMNS,
              ([_cell(row[c]) for c in SUMMARY_COLUMNS] for row in summary))
    ok = sorted((r for r in records if r.status == "ok"), key=lambda r: r.key)
    write_csv(report / "ratios.csv", ("algorithm", "p", "instance", "ratio"),
              ([r.algorithm, str(r.p), r.instance, _cell(r.ratio)] for r in ok))
    baseline_rows = sorted({(r.instance, r.baseline_heuristic_ratio) for r in records
                            if r.baseline_heuristic_ratio is not None})
    write_csv(report / "baseline.csv", ("instance", "heuristic_ratio"),
              ([i, _cell(v)] for i, v in baseline_rows))
    transfer_ok = [t for t in transfer if t.status == "ok" and t.qaoa_ratio is not None]
    write_csv(report / "transfer_pairs.csv", ("algorithm", "p", "instance", "qaoa_ratio", "transfer_ratio"),
              ([t.algorithm, str(t.p), t.instance, _cell(t.qaoa_ratio), _cell(t.transfer_ratio)]
               for t in transfer_ok))
    means = _transfer_means(transfer_ok)
    write_csv(report / "transfer_by_p.csv",
              ("algorithm", "p", "count", "mean_qaoa_ratio", "mean_transfer_ratio", "mean_abs_difference"),
              ([a, str(p), str(c), _cell(q), _cell(t), _cell(dv)] for a, p, c, q, t, dv in means))

    for row in summary:
        print(f"{row['algorithm']:<20} p={row['p']}  n={row['count']:<3} mean={row['mean']:.4f} "
              f"median={row['median']:.4f} [{row['min']:.4f}, {row['max']:.4f}]", file=out)
    if plots and (ok or transfer_ok):
        try:
            from . import plotting
        except ImportError:
            print("matplotlib is not installed; figures skipped (pip install pqaoa[plot])", file=out)
        else:
            for path in plotting.render_all(report):
                print(f"figure {path}", file=out)
    print(f"report written to {report}", file=out)
    return EXIT_OK


def _transfer_means(rows: Sequence[TransferRecord]):
    groups: dict[tuple[str, int], list[TransferRecord]] = {}
    for r in rows:
        groups.setdefault((r.algorithm, r.p), []).append(r)
    out = []
    for (a, p), g in sorted(groups.items(), key=lambda kv: (ALGORITHMS.index(kv[0][0]), kv[0][1])):
        q = [r.qaoa_ratio for r in g]
        t = [r.transfer_ratio for r in g]
        out.append((a, p, len(g), statistics.fmean(q), statistics.fmean(t),
                    statistics.fmean(abs(x - y) for x, y in zip(t, q))))
    return out
