"""Gaussian routing instances, classical baselines and approximation ratios.

Routes follow the step semantics of the routing QUBO: every vehicle occupies
exactly one location at each of ``n + 1`` steps, each customer is occupied
exactly once over all vehicles and steps, the depot any number of times, and
the cost is the sum of distances between consecutive steps divided by the
largest distance in the instance. Vehicles are not required to start or end
at the depot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np

from .exceptions import SizeError, ValidationError
from .model import (BRUTE_FORCE_MAX_VARS, VrpInstance, brute_force_min, build_vrp_qubo, encode_routes,
                    evaluate, route_cost)

ROUTE_ENUM_MAX_N = 8
_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    A: int
    grid_half: int = 50
    sigma: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.A < 1:
            raise ValidationError("need n >= 1 customers and A >= 1 vehicles")
        if self.sigma <= 0 or self.grid_half < 1:
            raise ValidationError("sigma and grid_half must be positive")


def generate_vrp(cfg: GeneratorConfig) -> VrpInstance:
    """Depot at the origin, customers from a rounded, clamped normal per axis.

    A draw that lands on an occupied grid point is redrawn.
    """
    capacity = (2 * cfg.grid_half + 1) ** 2 - 1
    if cfg.n > capacity:
        raise ValidationError(f"{cfg.n} customers do not fit on a grid with {capacity} free points")
    rng = np.random.default_rng(cfg.seed)
    used = {(0, 0)}
    coords = [(0, 0)]
    for _ in range(cfg.n):
        for _ in range(_MAX_REDRAWS):
            x, y = np.clip(np.rint(rng.normal(0.0, cfg.sigma, size=2)), -cfg.grid_half, cfg.grid_half)
            point = (int(x), int(y))
            if point not in used:
                break
        else:
            raise ValidationError(f"no free grid point after {_MAX_REDRAWS} draws")
        used.add(point)
        coords.append(point)
    return VrpInstance(tuple(coords), cfg.A, cfg.seed)


@dataclass
class BaselineResult:
    cost: float
    routes: list[list[int]]
    method: str
    qubo_energy: float
    vehicles_used: int = field(init=False)

    def __post_init__(self):
        self.vehicles_used = sum(any(loc != 0 for loc in r) for r in self.routes)


def _baseline(instance: VrpInstance, paths, method: str) -> BaselineResult:
    x = encode_routes(instance, paths)
    return BaselineResult(route_cost(instance, paths), [list(p) for p in paths], method,
                          evaluate(build_vrp_qubo(instance), x))


def route_enum_optimal(instance: VrpInstance) -> BaselineResult:
    """Exact optimum by enumerating customer splits and visiting orders.

    A vehicle serving customer set ``S`` needs ``n + 1 - |S| >= 1`` depot
    steps. By the triangle inequality one contiguous depot block is optimal,
    so its cheapest path is the cheapest tour through the depot and ``S``
    with its longest leg removed.
    """
    n, A = instance.n, instance.A
    if n > ROUTE_ENUM_MAX_N:
        raise SizeError(f"route enumeration is limited to n <= {ROUTE_ENUM_MAX_N}")
    w = instance.w / instance.W
    customers = list(range(1, n + 1))

    best_single: dict[int, tuple[float, list[int]]] = {0: (0.0, [0] * (n + 1))}
    for mask in range(1, 1 << n):
        members = [customers[b] for b in range(n) if mask >> b & 1]
        best = (math.inf, None)
        for order in permutations(members):
            tour = (0, *order)
            legs = [w[tour[t], tour[(t + 1) % len(tour)]] for t in range(len(tour))]
            cut = int(np.argmax(legs))
            cost = sum(legs) - legs[cut]
            if cost < best[0] - 1e-12:
                best = (cost, _open_tour(tour, cut, n))
        best_single[mask] = best

    @lru_cache(maxsize=None)
    def split(mask: int, vehicles: int):
        if mask == 0:
            return 0.0, ()
        if vehicles == 0:
            return math.inf, ()
        low = mask & -mask
        best = (math.inf, ())
        sub = mask
        while sub:
            if sub & low:
                rest_cost, rest = split(mask ^ sub, vehicles - 1)
                total = best_single[sub][0] + rest_cost
                if total < best[0] - 1e-12:
                    best = (total, (sub, *rest))
            sub = (sub - 1) & mask
        return best

    _, parts = split((1 << n) - 1, A)
    paths = [best_single[part][1] for part in parts]
    paths += [[0] * (n + 1) for _ in range(A - len(paths))]
    return _baseline(instance, paths, "route-enum")


def _open_tour(tour: tuple[int, ...], cut: int, n: int) -> list[int]:
    """Linear step sequence from a depot tour with leg ``cut`` removed."""
    start = (cut + 1) % len(tour)
    ring = [tour[(start + t) % len(tour)] for t in range(len(tour))]
    d = ring.index(0)
    return ring[:d] + [0] * (n + 1 - (len(tour) - 1)) + ring[d + 1:]


def _path_cost(w: np.ndarray, path) -> float:
    return float(sum(w[path[s], path[s + 1]] for s in range(len(path) - 1)))


def two_opt(w: np.ndarray, path: list[int]) -> list[int]:
    """Segment reversals until none lowers the cost."""
    path = list(path)
    improved = True
    while improved:
        improved = False
        current = _path_cost(w, path)
        for i in range(len(path) - 1):
            for j in range(i + 1, len(path)):
                cand = path[:i] + path[i:j + 1][::-1] + path[j + 1:]
                cost = _path_cost(w, cand)
                if cost < current - 1e-12:
                    path, current, improved = cand, cost, True
    return path


def heuristic_baseline(instance: VrpInstance, seed: int = 0) -> BaselineResult:
    """Greedy nearest-neighbour assignment followed by 2-opt per vehicle.

    All vehicles start at the depot; the globally closest (vehicle, customer)
    pair is served next, with ties broken by a seeded shuffle.
    """
    n, A = instance.n, instance.A
    w = instance.w / instance.W
    rng = np.random.default_rng(seed)
    tiebreak = {c: r for c, r in zip(range(1, n + 1), rng.permutation(n))}
    position = [0] * A
    visits: list[list[int]] = [[] for _ in range(A)]
    todo = set(range(1, n + 1))
    while todo:
        a, c = min(((a, c) for a in range(A) for c in todo),
                   key=lambda ac: (w[position[ac[0]], ac[1]], tiebreak[ac[1]], ac[0]))
        visits[a].append(c)
        position[a] = c
        todo.remove(c)
    paths = []
    for seq in visits:
        path = ([0] + seq + [0] * n)[:n + 1] if seq else [0] * (n + 1)
        paths.append(two_opt(w, path))
    return _baseline(instance, paths, "nn-2opt")


def approximation_ratio(found_energy: float, optimal_energy: float) -> float:
    """``optimal / found``; 1.0 means the optimum was found."""
    if optimal_energy <= 0:
        raise ValidationError("approximation ratios need a positive optimum")
    if found_energy <= 0 or found_energy < optimal_energy - 1e-9:
        raise ValidationError(f"found energy {found_energy} is below the optimum {optimal_energy}")
    return min(1.0, optimal_energy / found_energy)


def feasible_ratio(best_feasible_energy: float | None, optimal_energy: float) -> float:
    """Ratio of the best feasible sample; 0.0 when no feasible state was drawn."""
    if best_feasible_energy is None:
        return 0.0
    return approximation_ratio(best_feasible_energy, optimal_energy)


def optimal_reference(instance: VrpInstance, model=None, max_vars: int = BRUTE_FORCE_MAX_VARS):
    """Feasible optimum of the routing QUBO and where it came from.

    Returns ``(energy, source)``. Within the cap the minimum runs over every
    assignment whose penalty groups vanish; above it the route enumeration
    supplies the same value.
    """
    model = build_vrp_qubo(instance) if model is None else model
    if model.num_vars <= max_vars:
        return brute_force_min(model, max_vars, feasible_only=True).energy, "brute-force"
    return route_enum_optimal(instance).qubo_energy, "route-enum"
