"""Training loops for full QAOA and the two parallel (sliced) variants.

All three modes share one shape: a parameter vector becomes one or more
circuits, the circuits are sampled, the samples are glued into full-width
bitstrings and the mean energy of the *full* model over those bitstrings is
the objective handed to the classical optimiser.

Random streams are keyed by ``(seed, slice, evaluation, purpose)`` so any run
replays bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimensionError, RecombinationCapError, SizeError, ValidationError
from .model import QuboModel, _Model, penalty_energies
from .optimize import OptimizerSettings, TrainingTrace, minimize
from .pareto import knee_index, pareto_indices
from .sim import MAX_QUBITS, DiagonalHamiltonian, QaoaParams, SampleSet, run_qaoa, sample
from .slicing import SliceDecomposition, slice_alignment

_SAMPLE, _SUBSAMPLE, _FINAL = 0, 1, 2
_FEASIBLE_ATOL = 1e-9
_TABLE_MAX_VARS = 22


@dataclass
class TrainingConfig:
    """Knobs shared by every training mode.

    ``shots_per_eval=None`` means ``10**(p + 1)`` circuit shots per objective
    evaluation. ``subsamples`` is the number of draws kept per slice.
    """

    optimizer: str = "nelder-mead"
    max_iters: int = 100
    shots_per_eval: int | None = None
    subsamples: int = 100
    seed: int = 0
    convergence_tol: float = 1e-6
    angle_init: str = "zeros"
    initial_step: float = 0.25
    reevaluate_every: int = 10
    recombine_cap: int = 10**6
    final_samples: int = 10_000
    same_subsample: bool = False
    max_qubits: int = MAX_QUBITS

    def __post_init__(self):
        if self.angle_init not in ("zeros", "uniform-random"):
            raise ValidationError(f"unknown angle_init {self.angle_init!r}")
        for name in ("max_iters", "subsamples", "recombine_cap", "final_samples"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.shots_per_eval is not None and self.shots_per_eval < self.subsamples:
            raise ValidationError("subsamples cannot exceed shots_per_eval")

    def shots(self, p: int) -> int:
        shots = self.shots_per_eval or 10 ** (p + 1)
        if shots < self.subsamples:
            raise ValidationError(f"{shots} shots per evaluation cannot supply {self.subsamples} subsamples")
        return shots

    def settings(self) -> OptimizerSettings:
        return OptimizerSettings(method=self.optimizer, max_iters=self.max_iters, tol=self.convergence_tol,
                                 initial_step=self.initial_step, reevaluate_every=self.reevaluate_every,
                                 seed=self.seed)


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Generator for one ``(seed, keys...)`` stream."""
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


# ---------------------------------------------------------------------------
# angles


@dataclass
class AngleSet:
    """Shared angles (``gamma``/``beta`` of shape ``(p,)``) or one set per slice ``(k, p)``.

    Flat order: shared is ``[gamma..., beta...]``; per-slice concatenates
    ``[gamma_a..., beta_a...]`` for ``a = 0..k-1``.
    """

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.gamma.shape != self.beta.shape or self.gamma.ndim not in (1, 2):
            raise DimensionError("gamma and beta must share a (p,) or (k, p) shape")

    @property
    def multi(self) -> bool:
        return self.gamma.ndim == 2

    @property
    def p(self) -> int:
        return self.gamma.shape[-1]

    @property
    def k(self) -> int:
        return self.gamma.shape[0] if self.multi else 1

    @property
    def num_params(self) -> int:
        return self.gamma.size + self.beta.size

    def flatten(self) -> np.ndarray:
        if not self.multi:
            return np.concatenate([self.gamma, self.beta])
        return np.concatenate([np.concatenate([g, b]) for g, b in zip(self.gamma, self.beta)])

    @classmethod
    def from_flat(cls, vec, p: int, k: int | None = None) -> AngleSet:
        vec = np.asarray(vec, dtype=float)
        if k is None:
            if vec.size != 2 * p:
                raise DimensionError(f"expected {2 * p} angles, got {vec.size}")
            return cls(vec[:p], vec[p:])
        if vec.size != 2 * k * p:
            raise DimensionError(f"expected {2 * k * p} angles, got {vec.size}")
        blocks = vec.reshape(k, 2 * p)
        return cls(blocks[:, :p], blocks[:, p:])

    def params(self, a: int = 0) -> QaoaParams:
        if self.multi:
            return QaoaParams(self.gamma[a], self.beta[a])
        return QaoaParams(self.gamma, self.beta)

    def extended(self) -> AngleSet:
        """One more layer with zero angles, an identity on every circuit."""
        pad = [(0, 0)] * (self.gamma.ndim - 1) + [(0, 1)]
        return AngleSet(np.pad(self.gamma, pad), np.pad(self.beta, pad))


def initial_angles(p: int, k: int | None, config: TrainingConfig) -> np.ndarray:
    size = 2 * p * (k or 1)
    if config.angle_init == "zeros":
        return np.zeros(size)
    rng = rng_for(config.seed, 0, 0, 99)
    blocks = [np.concatenate([rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p)])
              for _ in range(k or 1)]
    return np.concatenate(blocks)


# ---------------------------------------------------------------------------
# sample handling


class EnergyScorer:
    """Energies of sampled states under a model, through a lookup table when small."""

    def __init__(self, model: _Model, table: np.ndarray | None = None):
        self.model = model
        if table is None and model.num_vars <= _TABLE_MAX_VARS:
            table = model.energy_table(max_vars=_TABLE_MAX_VARS)
        self.table = table

    def __call__(self, samples: SampleSet) -> np.ndarray:
        if samples.n != self.model.num_vars:
            raise DimensionError(f"{samples.n}-bit samples vs {self.model.num_vars}-variable model")
        if self.table is not None:
            return self.table[samples.states]
        return self.model.energies(samples.bits())


def recombine(slice_samples: Sequence[SampleSet], index_maps: Sequence[Sequence[int]],
              num_vars: int | None = None, cap: int = 10**6) -> SampleSet:
    """Cartesian product of slice samples scattered to global positions.

    Multiplicities multiply, so the result holds ``prod(len(s))`` draws.
    """
    if len(slice_samples) != len(index_maps) or not slice_samples:
        raise DimensionError("need one sample set per index map")
    covered = [v for m in index_maps for v in m]
    if len(set(covered)) != len(covered):
        raise ValidationError("index maps overlap")
    width = len(covered) if num_vars is None else num_vars
    if sorted(covered) != list(range(width)):
        raise ValidationError("slices do not cover every variable; residual-only variables cannot be sampled")
    if width > 62:
        raise SizeError("recombined states are limited to 62 bits")
    distinct = math.prod(len(s.states) for s in slice_samples)
    if distinct > cap:
        raise RecombinationCapError(f"product of {distinct} distinct states exceeds cap {cap}")
    codes = np.zeros(1, dtype=np.int64)
    counts = np.ones(1, dtype=np.int64)
    for s, m in zip(slice_samples, index_maps):
        if s.n != len(m):
            raise DimensionError(f"{s.n}-bit samples for a {len(m)}-variable slice")
        weights = np.left_shift(np.int64(1), np.asarray(m, dtype=np.int64))
        scattered = s.bits().astype(np.int64) @ weights
        codes = (codes[:, None] + scattered[None, :]).ravel()
        counts = (counts[:, None] * s.counts[None, :]).ravel()
    return SampleSet(width, codes, counts)


def weighted_mean(values: np.ndarray, counts: np.ndarray) -> float:
    return float(np.dot(values, counts) / counts.sum())


def objective_mean_energy(samples: SampleSet, model: _Model | EnergyScorer) -> float:
    """Count-weighted mean energy over a sample multiset."""
    if samples.shots == 0:
        raise ValidationError("cannot score an empty sample set")
    scorer = model if isinstance(model, EnergyScorer) else EnergyScorer(model)
    return weighted_mean(scorer(samples), samples.counts)


def subsample(samples: SampleSet, slice_model: _Model, m: int, rng) -> SampleSet:
    """Keep ``min(m, shots)`` draws, feasible ones first.

    Feasible draws (all penalty groups zero) are taken uniformly at random
    without replacement; any shortfall is filled with the infeasible draws of
    lowest slice energy.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    rng = np.random.default_rng(rng)
    bits = samples.bits()
    feasible = np.abs(penalty_energies(slice_model, bits)) <= _FEASIBLE_ATOL
    n_feasible = int(samples.counts[feasible].sum())
    take = np.zeros_like(samples.counts)
    if n_feasible >= m:
        idx = np.flatnonzero(feasible)
        take[idx] = rng.multivariate_hypergeometric(samples.counts[idx], m)
    else:
        take[feasible] = samples.counts[feasible]
        remaining = m - n_feasible
        idx = np.flatnonzero(~feasible)
        energies = slice_model.energies(bits[idx])
        for j in idx[np.lexsort((samples.states[idx], energies))]:
            if remaining == 0:
                break
            got = min(remaining, int(samples.counts[j]))
            take[j] = got
            remaining -= got
    keep = take > 0
    return SampleSet(samples.n, samples.states[keep], take[keep])


# ---------------------------------------------------------------------------
# training


def _warm_start(x0, expected: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.size != expected:
        raise DimensionError(f"initial angles have {x0.size} entries, expected {expected}")
    return x0


def train_qaoa(model: _Model, p: int, config: TrainingConfig | None = None,
               initial: Sequence[float] | None = None,
               score_model: _Model | None = None) -> TrainingTrace:
    """Train ``2p`` shared angles of a QAOA circuit on ``model``.

    Every evaluation samples ``10**(p+1)`` shots (or ``shots_per_eval``) and
    scores them with ``score_model`` (default: ``model`` itself).
    """
    config = config or TrainingConfig()
    if model.num_vars > config.max_qubits:
        raise SizeError(f"{model.num_vars} qubits exceeds the simulator cap of {config.max_qubits}; "
                        "slice the model and use a parallel QAOA mode instead")
    H = DiagonalHamiltonian.from_model(model, config.max_qubits)
    if score_model is None:
        scorer = EnergyScorer(model, H.energies)
    else:
        if score_model.num_vars != model.num_vars:
            raise DimensionError("score model must cover the circuit's variables")
        scorer = EnergyScorer(score_model)
    shots = config.shots(p)
    counter = [0]

    def objective(vec):
        e = counter[0]
        counter[0] += 1
        angles = AngleSet.from_flat(vec, p)
        samples = sample(run_qaoa(H, angles.params()), shots, rng_for(config.seed, 0, e, _SAMPLE))
        return weighted_mean(scorer(samples), samples.counts), shots

    x0 = initial_angles(p, None, config) if initial is None else _warm_start(initial, 2 * p)
    _, trace = minimize(objective, x0, config.settings())
    trace.meta.update(mode="qaoa", p=p, k=1, qubits=H.n, num_params=2 * p,
                      shots_per_eval=shots, seed=config.seed)
    return trace


def _slice_hamiltonians(d: SliceDecomposition, config: TrainingConfig, which=None):
    out = []
    for a, s in enumerate(d.slices):
        if which is not None and a not in which:
            continue
        if s.num_vars > config.max_qubits:
            raise SizeError(f"slice {a} has {s.num_vars} qubits, above the cap of {config.max_qubits}")
        out.append(DiagonalHamiltonian.from_model(s, config.max_qubits))
    return out


def _check_decomposition(d: SliceDecomposition):
    if d.k < 1:
        raise ValidationError("decomposition has no slices")


def _degenerate(d: SliceDecomposition, p: int, config: TrainingConfig, initial, mode: str):
    trace = train_qaoa(d.slices[0], p, config, initial, score_model=d.source)
    trace.meta["mode"] = mode
    return trace


def train_multi_angle_pqaoa(d: SliceDecomposition, p: int, config: TrainingConfig | None = None,
                            initial: Sequence[float] | None = None) -> TrainingTrace:
    """Independent ``(gamma, beta)`` per slice: ``2 k p`` trainable angles."""
    config = config or TrainingConfig()
    _check_decomposition(d)
    if d.k == 1:
        return _degenerate(d, p, config, initial, "pqaoa-multi")
    Hs = _slice_hamiltonians(d, config)
    scorer = EnergyScorer(d.source)
    shots, m, k = config.shots(p), config.subsamples, d.k
    counter = [0]

    def objective(vec):
        e = counter[0]
        counter[0] += 1
        angles = AngleSet.from_flat(vec, p, k)
        subs = []
        for a, (H, s) in enumerate(zip(Hs, d.slices)):
            drawn = sample(run_qaoa(H, angles.params(a)), shots, rng_for(config.seed, a, e, _SAMPLE))
            subs.append(subsample(drawn, s, m, rng_for(config.seed, a, e, _SUBSAMPLE)))
        glued = recombine(subs, d.index_maps, d.source.num_vars, config.recombine_cap)
        return weighted_mean(scorer(glued), glued.counts), shots * k

    x0 = initial_angles(p, k, config) if initial is None else _warm_start(initial, 2 * k * p)
    _, trace = minimize(objective, x0, config.settings())
    trace.meta.update(mode="pqaoa-multi", p=p, k=k, qubits=max(H.n for H in Hs),
                      num_params=2 * k * p, shots_per_eval=shots, subsamples=m, seed=config.seed)
    return trace


def aligned_index_maps(d: SliceDecomposition) -> list[tuple[int, ...]]:
    """Index maps re-ordered so local position ``j`` means the same variable role in every slice."""
    perms = slice_alignment(d)
    if perms is None:
        raise ValidationError("slices are not identical; single-slice training does not apply")
    return [tuple(d.index_maps[a][perm[j]] for j in range(len(perm))) for a, perm in enumerate(perms)]


def train_single_slice_pqaoa(d: SliceDecomposition, p: int, config: TrainingConfig | None = None,
                             initial: Sequence[float] | None = None) -> TrainingTrace:
    """Simulate one of ``k`` identical slices and take the ``k``-fold product of its samples.

    Each factor of the product is an independent subsample of the same shot
    record unless ``config.same_subsample`` is set.
    """
    config = config or TrainingConfig()
    _check_decomposition(d)
    maps = aligned_index_maps(d)
    if d.k == 1:
        return _degenerate(d, p, config, initial, "pqaoa-single")
    (H,) = _slice_hamiltonians(d, config, which={0})
    ref = d.slices[0]
    scorer = EnergyScorer(d.source)
    shots, m, k = config.shots(p), config.subsamples, d.k
    counter = [0]

    def objective(vec):
        e = counter[0]
        counter[0] += 1
        angles = AngleSet.from_flat(vec, p)
        drawn = sample(run_qaoa(H, angles.params()), shots, rng_for(config.seed, 0, e, _SAMPLE))
        if config.same_subsample:
            subs = [subsample(drawn, ref, m, rng_for(config.seed, 0, e, _SUBSAMPLE))] * k
        else:
            subs = [subsample(drawn, ref, m, rng_for(config.seed, a, e, _SUBSAMPLE)) for a in range(k)]
        glued = recombine(subs, maps, d.source.num_vars, config.recombine_cap)
        return weighted_mean(scorer(glued), glued.counts), shots

    x0 = initial_angles(p, None, config) if initial is None else _warm_start(initial, 2 * p)
    _, trace = minimize(objective, x0, config.settings())
    trace.meta.update(mode="pqaoa-single", p=p, k=k, qubits=H.n, num_params=2 * p,
                      shots_per_eval=shots, subsamples=m, seed=config.seed)
    return trace


def trace_angles(trace: TrainingTrace) -> AngleSet:
    """Best angles of a trace as an :class:`AngleSet`."""
    p, k = trace.meta["p"], trace.meta.get("k", 1)
    multi = trace.meta.get("mode") == "pqaoa-multi" and k > 1
    return AngleSet.from_flat(trace.best_angles, p, k if multi else None)


# ---------------------------------------------------------------------------
# final sampling and transfer


@dataclass
class SolutionSample:
    """Summary of a final sampling pass.

    ``best_feasible_*`` consider only states on which every penalty group of
    the scored model vanishes; they are ``None`` when no such state was drawn.
    """

    best_energy: float
    best_state: int
    mean_energy: float
    shots: int
    best_feasible_energy: float | None = None
    best_feasible_state: int | None = None
    feasible_shots: int = 0


def _summarise(samples: SampleSet, scorer: EnergyScorer) -> SolutionSample:
    energies = scorer(samples)
    j = int(np.argmin(energies))
    feasible = np.abs(penalty_energies(scorer.model, samples.bits())) <= _FEASIBLE_ATOL
    out = SolutionSample(float(energies[j]), int(samples.states[j]),
                         weighted_mean(energies, samples.counts), samples.shots,
                         feasible_shots=int(samples.counts[feasible].sum()))
    if feasible.any():
        idx = np.flatnonzero(feasible)
        f = idx[int(np.argmin(energies[idx]))]
        out.best_feasible_energy = float(energies[f])
        out.best_feasible_state = int(samples.states[f])
    return out


def final_solution(target: _Model | SliceDecomposition, trace: TrainingTrace,
                   config: TrainingConfig | None = None, seed: int | None = None) -> SolutionSample:
    """Sample the trained circuit ``final_samples`` times and keep the best state.

    Sliced modes sample each factor ``final_samples ** (1/k)`` times and take
    the product, so the glued set has ``final_samples`` draws.
    """
    config = config or TrainingConfig()
    seed = config.seed if seed is None else seed
    mode = trace.meta["mode"]
    angles = trace_angles(trace)
    if mode == "qaoa" or (isinstance(target, SliceDecomposition) and target.k == 1):
        model = target if not isinstance(target, SliceDecomposition) else target.slices[0]
        full = target if not isinstance(target, SliceDecomposition) else target.source
        H = DiagonalHamiltonian.from_model(model, config.max_qubits)
        drawn = sample(run_qaoa(H, angles.params()), config.final_samples, rng_for(seed, 0, 0, _FINAL))
        return _summarise(drawn, EnergyScorer(full, H.energies if full is model else None))
    d = target
    per_slice = max(1, round(config.final_samples ** (1.0 / d.k)))
    scorer = EnergyScorer(d.source)
    if mode == "pqaoa-multi":
        Hs = _slice_hamiltonians(d, config)
        subs = [sample(run_qaoa(H, angles.params(a)), per_slice, rng_for(seed, a, 0, _FINAL))
                for a, H in enumerate(Hs)]
        maps = d.index_maps
    else:
        (H,) = _slice_hamiltonians(d, config, which={0})
        state = run_qaoa(H, angles.params())
        subs = [sample(state, per_slice, rng_for(seed, a, 0, _FINAL)) for a in range(d.k)]
        maps = aligned_index_maps(d)
    glued = recombine(subs, maps, d.source.num_vars, config.recombine_cap)
    return _summarise(glued, scorer)


@dataclass
class TransferSource:
    source: str
    gamma: list[float]
    beta: list[float]
    best_energy: float
    mean_energy: float
    best_feasible_energy: float | None = None
    ratio: float | None = None


@dataclass
class TransferResult:
    sources: list[TransferSource]

    @property
    def best(self) -> TransferSource:
        return min(self.sources, key=lambda s: s.best_energy)


def transfer_evaluate(full_model: _Model, trace: TrainingTrace, p: int | None = None,
                      shots: int = 10_000, seed: int = 0, optimum: float | None = None,
                      max_qubits: int = MAX_QUBITS) -> TransferResult:
    """Run full-model QAOA with angles learned by a sliced mode.

    Multi-angle traces contribute one candidate per slice; shared-angle
    traces contribute one. Each candidate reports the best sampled energy and,
    given ``optimum``, the approximation ratio of its best feasible sample.
    """
    from .instances import feasible_ratio

    if full_model.num_vars > max_qubits:
        raise SizeError(f"{full_model.num_vars} qubits exceeds the simulator cap of {max_qubits}")
    if p is not None and p != trace.meta["p"]:
        raise DimensionError(f"trace was trained at p={trace.meta['p']}, not {p}")
    angles = trace_angles(trace)
    H = DiagonalHamiltonian.from_model(full_model, max_qubits)
    scorer = EnergyScorer(full_model, H.energies)
    sources = []
    for a in range(angles.k):
        params = angles.params(a)
        drawn = sample(run_qaoa(H, params), shots, rng_for(seed, a, 0, _FINAL))
        summary = _summarise(drawn, scorer)
        ratio = None if optimum is None else feasible_ratio(summary.best_feasible_energy, optimum)
        name = f"slice-{a}" if angles.multi else "shared"
        sources.append(TransferSource(name, list(params.gamma), list(params.beta),
                                      summary.best_energy, summary.mean_energy,
                                      summary.best_feasible_energy, ratio))
    return TransferResult(sources)


# ---------------------------------------------------------------------------
# multi-objective


Objective = Callable[[np.ndarray], float]


def _objective_values(objective, bits: np.ndarray) -> np.ndarray:
    if isinstance(objective, (QuboModel, _Model)):
        return objective.energies(bits)
    return np.array([float(objective(row)) for row in bits])


def train_multi_objective(constraint_model: _Model, objectives: Sequence[Objective | _Model], p: int,
                          config: TrainingConfig | None = None,
                          initial: Sequence[float] | None = None) -> TrainingTrace:
    """QAOA on the constraint Hamiltonian ``H`` scored by the vector ``(f_i + H)_i``.

    Each evaluation's objective vector is the sample mean of ``f_i(x) + H(x)``.
    The optimiser minimises its distance to the ideal corner, scaled per
    objective by the spread seen among the first evaluation's samples (a
    single objective is passed through unscaled). The knee of the Pareto
    front of all evaluated vectors is stored as ``meta["knee_angles"]``.
    """
    config = config or TrainingConfig()
    if not objectives:
        raise ValidationError("need at least one objective")
    if constraint_model.num_vars > config.max_qubits:
        raise SizeError(f"{constraint_model.num_vars} qubits exceeds the simulator cap")
    H = DiagonalHamiltonian.from_model(constraint_model, config.max_qubits)
    shots = config.shots(p)
    counter = [0]
    evaluated: list[tuple[list[float], list[float]]] = []
    scale: dict[str, np.ndarray] = {}

    def objective(vec):
        e = counter[0]
        counter[0] += 1
        params = AngleSet.from_flat(vec, p).params()
        drawn = sample(run_qaoa(H, params), shots, rng_for(config.seed, 0, e, _SAMPLE))
        bits = drawn.bits()
        penalty = H.energies[drawn.states]
        per_sample = np.stack([_objective_values(f, bits) + penalty for f in objectives])
        vector = per_sample @ drawn.counts / drawn.counts.sum()
        evaluated.append((list(map(float, vec)), vector.tolist()))
        if len(objectives) == 1:
            return float(vector[0]), shots
        if not scale:
            low, high = per_sample.min(axis=1), per_sample.max(axis=1)
            scale["low"], scale["span"] = low, np.where(high > low, high - low, 1.0)
        return float(np.linalg.norm((vector - scale["low"]) / scale["span"])), shots

    x0 = initial_angles(p, None, config) if initial is None else _warm_start(initial, 2 * p)
    _, trace = minimize(objective, x0, config.settings())
    values = [v for _, v in evaluated]
    fronts = []
    for it in trace.iterations:
        seen = values[:it.evaluations]
        fronts.append([seen[i] for i in pareto_indices(seen)])
    front_idx = pareto_indices(values)
    knee = front_idx[knee_index([values[i] for i in front_idx])]
    trace.meta.update(mode="multi-objective", p=p, k=1, qubits=H.n, num_params=2 * p,
                      shots_per_eval=shots, seed=config.seed, arity=len(objectives),
                      fronts=fronts, knee_angles=evaluated[knee][0], knee_objectives=values[knee])
    return trace
