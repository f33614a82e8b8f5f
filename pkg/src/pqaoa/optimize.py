"""Derivative-free minimisers with per-iteration traces."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .exceptions import OptimizerAbort, ValidationError

# Nelder-Mead coefficients
REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class IterationRecord:
    iteration: int
    angles: list[float]
    objective: float
    shots: int = 0
    evaluations: int = 0


@dataclass
class TrainingTrace:
    """Per-iteration incumbents of one optimisation run.

    ``objective`` of an iteration is the value of the incumbent after that
    iteration; with a noisy objective and periodic re-evaluation it may go
    up, but :attr:`best_objective` and :meth:`best_so_far` only go down.
    """

    iterations: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    evaluations: int = 0
    initial_angles: list[float] = field(default_factory=list)
    initial_objective: float = math.nan
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        if not self.iterations:
            raise ValidationError("empty trace")
        values = [it.objective for it in self.iterations]
        return int(np.argmin(values))

    @property
    def best_objective(self) -> float:
        return self.iterations[self.best_index].objective

    @property
    def best_angles(self) -> np.ndarray:
        return np.array(self.iterations[self.best_index].angles)

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([it.objective for it in self.iterations])

    @property
    def shots_used(self) -> int:
        return sum(it.shots for it in self.iterations)

    def to_json(self) -> dict:
        return {
            "iterations": [vars(it) for it in self.iterations],
            "best_angles": self.best_angles.tolist() if self.iterations else [],
            "best_objective": self.best_objective if self.iterations else None,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "initial_angles": list(self.initial_angles),
            "initial_objective": self.initial_objective,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data) -> TrainingTrace:
        return cls(
            [IterationRecord(**it) for it in data["iterations"]],
            bool(data["converged"]),
            int(data.get("evaluations", 0)),
            list(data.get("initial_angles", [])),
            float(data.get("initial_objective", math.nan)),
            dict(data.get("meta", {})),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


@dataclass
class OptimizerSettings:
    method: str = "nelder-mead"
    max_iters: int = 200
    tol: float = 1e-6
    xtol: float = 1e-4
    initial_step: float = 0.25
    reevaluate_every: int = 0
    seed: int = 0


class _Counted:
    """Wraps the objective to count calls and catch non-finite values."""

    def __init__(self, f, trace):
        self.f, self.trace = f, trace
        self.pending_shots = 0

    def __call__(self, x):
        value = self.f(np.array(x, dtype=float))
        self.trace.evaluations += 1
        if isinstance(value, tuple):
            value, shots = value
            self.pending_shots += int(shots)
        value = float(value)
        if not math.isfinite(value):
            raise OptimizerAbort(f"objective returned {value} at {list(x)}", self.trace)
        return value

    def record(self, iteration, x, value):
        self.trace.iterations.append(IterationRecord(iteration, [float(v) for v in x], float(value),
                                                     self.pending_shots, self.trace.evaluations))
        self.pending_shots = 0


def minimize(f: Callable, x0, settings: OptimizerSettings | None = None, **overrides):
    """Minimise ``f`` from ``x0``; returns ``(x_best, trace)``.

    ``f`` may return either a float or ``(value, shots_used)``.
    """
    settings = settings or OptimizerSettings()
    if overrides:
        settings = OptimizerSettings(**{**vars(settings), **overrides})
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if settings.method == "nelder-mead":
        trace = _nelder_mead(f, x0, settings)
    elif settings.method == "spsa":
        trace = _spsa(f, x0, settings)
    else:
        raise ValidationError(f"unknown optimizer {settings.method!r}")
    return trace.best_angles, trace


def _nelder_mead(f, x0, s: OptimizerSettings) -> TrainingTrace:
    """Stops once the vertex values lie within ``tol`` and the vertices within ``xtol``."""
    trace = TrainingTrace(initial_angles=x0.tolist())
    fc = _Counted(f, trace)
    dim = x0.size
    simplex = [x0.copy()]
    for i in range(dim):
        v = x0.copy()
        v[i] += s.initial_step
        simplex.append(v)
    values = [fc(v) for v in simplex]
    trace.initial_objective = values[0]

    for it in range(1, s.max_iters + 1):
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diameter = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        if values[-1] - values[0] <= s.tol and diameter <= s.xtol:
            trace.converged = True
            fc.record(it, simplex[0], values[0])
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst, f_worst = simplex[-1], values[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = fc(xr)
        shrink = False
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        elif fr < values[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = fc(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < f_worst:
            xc = centroid + CONTRACT * (xr - centroid)
            fcv = fc(xc)
            if fcv <= fr:
                simplex[-1], values[-1] = xc, fcv
            else:
                shrink = True
        else:
            xc = centroid + CONTRACT * (worst - centroid)
            fcv = fc(xc)
            if fcv < f_worst:
                simplex[-1], values[-1] = xc, fcv
            else:
                shrink = True
        if shrink:
            best = simplex[0]
            for i in range(1, dim + 1):
                simplex[i] = best + SHRINK * (simplex[i] - best)
                values[i] = fc(simplex[i])

        b = int(np.argmin(values))
        if s.reevaluate_every and it % s.reevaluate_every == 0:
            values[b] = fc(simplex[b])
            b = int(np.argmin(values))
        fc.record(it, simplex[b], values[b])
    return trace


def _spsa(f, x0, s: OptimizerSettings, a: float = 0.2, c: float = 0.1,
          alpha: float = 0.602, gamma: float = 0.101) -> TrainingTrace:
    trace = TrainingTrace(initial_angles=x0.tolist())
    fc = _Counted(f, trace)
    rng = np.random.default_rng(s.seed)
    stability = 0.1 * s.max_iters
    x = x0.copy()
    trace.initial_objective = fc(x)
    for it in range(1, s.max_iters + 1):
        ak = a / (it + stability) ** alpha
        ck = c / it ** gamma
        delta = rng.choice((-1.0, 1.0), size=x.size)
        grad = (fc(x + ck * delta) - fc(x - ck * delta)) / (2 * ck) * delta
        step = ak * grad
        x = x - step
        fc.record(it, x, fc(x))
        if np.linalg.norm(step) <= s.tol:
            trace.converged = True
            break
    return trace
