"""Tagged QUBO / Ising models, problem builders and exhaustive oracles.

Every model is a sum of *term groups*. Each group carries one :class:`Tag`
and holds its own linear terms, quadratic terms and constant, so the tags
partition the polynomial: evaluating every group separately and adding the
results reproduces the full energy. Slicing works by choosing which groups
stay on the quantum side and which are only evaluated classically.

Assignments are always binary vectors ``x`` with ``x[i]`` the value of
variable ``i``. Ising models read them through ``s = 1 - 2 x`` (so ``x = 0``
is spin ``+1``); :func:`evaluate_spins` takes spins directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import DimensionError, InvalidInstanceError, SizeError, ValidationError

BRUTE_FORCE_MAX_VARS = 26
_DEGENERACY_RTOL = 1e-9


# ---------------------------------------------------------------------------
# tags and term groups


@dataclass(frozen=True)
class Tag:
    """Provenance of a term group.

    ``kind`` is one of ``objective``, ``vehicle``, ``coupling`` or ``user``.
    ``index`` is the vehicle number for ``vehicle`` tags and ``name`` the
    free-form label of ``user`` tags. ``penalty`` marks groups built from
    squared equality constraints, which vanish exactly on feasible points.
    """

    kind: str
    index: int | None = None
    name: str | None = None
    penalty: bool = False

    KINDS = ("objective", "vehicle", "coupling", "user")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown tag kind {self.kind!r}")
        if self.kind == "vehicle" and (self.index is None or self.index < 0):
            raise ValidationError("vehicle tags need a non-negative index")
        if self.kind == "user" and not self.name:
            raise ValidationError("user tags need a name")

    @classmethod
    def objective(cls) -> Tag:
        return cls("objective")

    @classmethod
    def vehicle(cls, a: int, penalty: bool = False) -> Tag:
        return cls("vehicle", index=int(a), penalty=penalty)

    @classmethod
    def coupling(cls, penalty: bool = True) -> Tag:
        return cls("coupling", penalty=penalty)

    @classmethod
    def user(cls, name: str, penalty: bool = False) -> Tag:
        return cls("user", name=name, penalty=penalty)

    def sort_key(self):
        return (self.KINDS.index(self.kind), self.index if self.index is not None else -1,
                self.name or "", self.penalty)

    def __str__(self):
        text = self.kind
        if self.index is not None:
            text += f"({self.index})"
        if self.name is not None:
            text += f"({self.name})"
        return text + ("/penalty" if self.penalty else "")

    def to_json(self) -> dict:
        return {"kind": self.kind, "index": self.index, "name": self.name, "penalty": self.penalty}

    @classmethod
    def from_json(cls, data: Mapping) -> Tag:
        return cls(data["kind"], data.get("index"), data.get("name"), bool(data.get("penalty", False)))


OBJECTIVE = Tag.objective()


@dataclass(frozen=True)
class TermGroup:
    """Linear terms, upper-triangular quadratic terms and a constant."""

    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    @property
    def num_terms(self) -> int:
        return len(self.linear) + len(self.quadratic) + (self.offset != 0.0)

    def variables(self) -> set[int]:
        out = set(self.linear)
        for i, j in self.quadratic:
            out.update((i, j))
        return out


class VarLabel(NamedTuple):
    """Structured label of a routing variable ``x[vehicle, location, step]``."""

    vehicle: int
    location: int
    step: int


def _clean_linear(num_vars: int, linear: Mapping) -> dict[int, float]:
    out: dict[int, float] = {}
    for key, value in linear.items():
        i = int(key)
        if not 0 <= i < num_vars:
            raise ValidationError(f"variable {i} out of range for {num_vars} variables")
        value = float(value)
        if not math.isfinite(value):
            raise ValidationError(f"non-finite coefficient on variable {i}")
        if value != 0.0:
            out[i] = out.get(i, 0.0) + value
    return {k: v for k, v in sorted(out.items()) if v != 0.0}


def _clean_quadratic(num_vars: int, quadratic: Mapping) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for key, value in quadratic.items():
        i, j = (int(k) for k in key)
        if i == j:
            raise ValidationError(f"self-pair ({i}, {i}) in quadratic terms")
        if not (0 <= i < num_vars and 0 <= j < num_vars):
            raise ValidationError(f"pair ({i}, {j}) out of range for {num_vars} variables")
        value = float(value)
        if not math.isfinite(value):
            raise ValidationError(f"non-finite coefficient on pair ({i}, {j})")
        pair = (i, j) if i < j else (j, i)
        if value != 0.0:
            out[pair] = out.get(pair, 0.0) + value
    return {k: v for k, v in sorted(out.items()) if v != 0.0}


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True, eq=False)
class _Model:
    num_vars: int
    groups: Mapping[Tag, TermGroup]
    labels: tuple[VarLabel, ...] | None = None

    spin = False

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValidationError("num_vars must be non-negative")
        cleaned = {}
        for tag in sorted(self.groups, key=Tag.sort_key):
            group = self.groups[tag]
            if not isinstance(tag, Tag):
                raise ValidationError(f"group key {tag!r} is not a Tag")
            offset = float(group.offset)
            if not math.isfinite(offset):
                raise ValidationError(f"non-finite offset in group {tag}")
            cleaned[tag] = TermGroup(
                _clean_linear(self.num_vars, group.linear),
                _clean_quadratic(self.num_vars, group.quadratic),
                offset,
            )
        object.__setattr__(self, "groups", cleaned)
        if self.labels is not None:
            labels = tuple(VarLabel(*lab) for lab in self.labels)
            if len(labels) != self.num_vars:
                raise ValidationError("labels must cover every variable exactly once")
            if len(set(labels)) != len(labels):
                raise ValidationError("duplicate variable labels")
            object.__setattr__(self, "labels", labels)

    # construction -------------------------------------------------------

    @classmethod
    def from_terms(cls, num_vars: int, linear=None, quadratic=None, offset: float = 0.0,
                   tag: Tag = OBJECTIVE, labels=None):
        """Build a single-group model."""
        group = TermGroup(dict(linear or {}), dict(quadratic or {}), offset)
        return cls(num_vars, {tag: group}, labels)

    def with_groups(self, groups: Mapping[Tag, TermGroup]):
        return type(self)(self.num_vars, groups, self.labels)

    # aggregated views ---------------------------------------------------

    @cached_property
    def linear(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for group in self.groups.values():
            for i, c in group.linear.items():
                out[i] = out.get(i, 0.0) + c
        return {k: v for k, v in sorted(out.items()) if v != 0.0}

    @cached_property
    def quadratic(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for group in self.groups.values():
            for pair, c in group.quadratic.items():
                out[pair] = out.get(pair, 0.0) + c
        return {k: v for k, v in sorted(out.items()) if v != 0.0}

    @property
    def offset(self) -> float:
        return float(sum(g.offset for g in self.groups.values()))

    @property
    def tags(self) -> tuple[Tag, ...]:
        return tuple(self.groups)

    def select_tags(self, kind: str | None = None, penalty: bool | None = None) -> set[Tag]:
        """Tags of this model matching ``kind`` and/or ``penalty``."""
        return {
            t for t in self.groups
            if (kind is None or t.kind == kind) and (penalty is None or t.penalty == penalty)
        }

    def restrict(self, tags: Iterable[Tag]):
        """Model over the same variables keeping only the given groups."""
        tags = set(tags)
        unknown = tags - set(self.groups)
        if unknown:
            raise ValidationError(f"unknown tags: {sorted(map(str, unknown))}")
        return self.with_groups({t: g for t, g in self.groups.items() if t in tags})

    # vectorised energies ------------------------------------------------

    @cached_property
    def _compiled(self):
        lin = np.zeros(self.num_vars)
        for i, c in self.linear.items():
            lin[i] = c
        pairs = list(self.quadratic.items())
        rows = np.array([p[0][0] for p in pairs], dtype=np.int64)
        cols = np.array([p[0][1] for p in pairs], dtype=np.int64)
        coef = np.array([p[1] for p in pairs], dtype=float)
        return lin, rows, cols, coef

    def energies(self, bits) -> np.ndarray:
        """Energies of a batch of binary assignments, shape ``(M, num_vars)``."""
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.shape[1] != self.num_vars:
            raise DimensionError(f"expected shape (M, {self.num_vars}), got {bits.shape}")
        values = bits.astype(float)
        if self.spin:
            values = 1.0 - 2.0 * values
        lin, rows, cols, coef = self._compiled
        out = np.full(bits.shape[0], self.offset)
        if self.num_vars:
            out += values @ lin
        cols_t = np.ascontiguousarray(values.T)
        for i, j, c in zip(rows, cols, coef):
            out += c * (cols_t[i] * cols_t[j])
        return out

    def energy_table(self, max_vars: int = BRUTE_FORCE_MAX_VARS) -> np.ndarray:
        """Energies of all ``2**num_vars`` basis states.

        Entry ``z`` holds the energy of the assignment whose bit ``i`` is
        ``(z >> i) & 1``.
        """
        if self.num_vars > max_vars:
            raise SizeError(f"{self.num_vars} variables exceeds the cap of {max_vars}")
        if not self.num_vars:
            return np.array([self.offset])
        return np.concatenate([e for _, e in _table_chunks(self)])


class QuboModel(_Model):
    """Binary quadratic model ``offset + sum linear x_i + sum quadratic x_i x_j``."""

    spin = False

    @classmethod
    def from_matrix(cls, Q, offset: float = 0.0, tag: Tag = OBJECTIVE):
        """Read ``x^T Q x + offset`` from a square matrix (any triangle)."""
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValidationError("Q must be square")
        n = Q.shape[0]
        linear = {i: Q[i, i] for i in range(n)}
        quadratic = {(i, j): Q[i, j] + Q[j, i] for i, j in combinations(range(n), 2)}
        return cls.from_terms(n, linear, quadratic, offset, tag)


class IsingModel(_Model):
    """Spin model ``offset + sum h_i s_i + sum J_ij s_i s_j`` with ``s = 1 - 2x``."""

    spin = True

    @property
    def h(self) -> dict[int, float]:
        return self.linear

    @property
    def J(self) -> dict[tuple[int, int], float]:
        return self.quadratic


def _table_chunks(model: _Model, chunk_bits: int = 16, start: int = 0):
    n = model.num_vars
    size = 1 << n
    step = min(size, 1 << chunk_bits)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(start, size, step):
        z = np.arange(start, start + step, dtype=np.int64)
        bits = ((z[:, None] >> shifts) & 1).astype(np.int8)
        yield start, model.energies(bits)


def index_to_bits(z: int, n: int) -> np.ndarray:
    """Binary vector of basis index ``z``; bit ``i`` is variable ``i``."""
    return np.array([(int(z) >> i) & 1 for i in range(n)], dtype=np.int8)


def bits_to_index(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def spin(x) -> np.ndarray:
    """Spin view ``s = 1 - 2x`` of a binary assignment."""
    return 1 - 2 * np.asarray(x, dtype=np.int64)


def combine(*models: _Model):
    """Sum of models over the same variables; groups with equal tags are added."""
    if not models:
        raise ValidationError("nothing to combine")
    first = models[0]
    if any(type(m) is not type(first) or m.num_vars != first.num_vars for m in models):
        raise DimensionError("models must share type and variable count")
    groups: dict[Tag, TermGroup] = {}
    for m in models:
        for tag, g in m.groups.items():
            old = groups.get(tag, TermGroup())
            lin = dict(old.linear)
            for i, c in g.linear.items():
                lin[i] = lin.get(i, 0.0) + c
            quad = dict(old.quadratic)
            for pair, c in g.quadratic.items():
                quad[pair] = quad.get(pair, 0.0) + c
            groups[tag] = TermGroup(lin, quad, old.offset + g.offset)
    return type(first)(first.num_vars, groups, first.labels)


# ---------------------------------------------------------------------------
# scalar evaluation


def _check_assignment(model: _Model, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != model.num_vars:
        raise DimensionError(f"assignment has length {x.shape}, model has {model.num_vars} variables")
    return x


def evaluate_group(model: _Model, tag: Tag, x) -> float:
    """Energy contributed by one term group."""
    x = _check_assignment(model, x)
    values = spin(x) if model.spin else x.astype(np.int64)
    return _group_energy(model.groups[tag], values)


def _group_energy(group: TermGroup, values) -> float:
    total = group.offset
    for i, c in group.linear.items():
        total += c * values[i]
    for (i, j), c in group.quadratic.items():
        total += c * values[i] * values[j]
    return float(total)


def evaluate(model: _Model, x) -> float:
    """Energy of binary assignment ``x`` (Ising models read it as spins ``1 - 2x``)."""
    x = _check_assignment(model, x)
    values = spin(x) if model.spin else x.astype(np.int64)
    return float(sum(_group_energy(g, values) for g in model.groups.values()))


def evaluate_spins(model: IsingModel, s) -> float:
    """Energy of an Ising model at spin vector ``s`` with entries in {+1, -1}."""
    s = np.asarray(s)
    if not np.all(np.isin(s, (-1, 1))):
        raise ValidationError("spins must be +1 or -1")
    return evaluate(model, ((1 - s) // 2).astype(np.int8))


# ---------------------------------------------------------------------------
# basis change


def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Substitute ``x = (1 - s) / 2`` group by group."""
    groups = {}
    for tag, g in model.groups.items():
        h: dict[int, float] = {}
        J: dict[tuple[int, int], float] = {}
        offset = g.offset
        for i, c in g.linear.items():
            offset += c / 2
            h[i] = h.get(i, 0.0) - c / 2
        for (i, j), c in g.quadratic.items():
            offset += c / 4
            h[i] = h.get(i, 0.0) - c / 4
            h[j] = h.get(j, 0.0) - c / 4
            J[(i, j)] = c / 4
        groups[tag] = TermGroup(h, J, offset)
    return IsingModel(model.num_vars, groups, model.labels)


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Substitute ``s = 1 - 2x`` group by group."""
    groups = {}
    for tag, g in model.groups.items():
        lin: dict[int, float] = {}
        quad: dict[tuple[int, int], float] = {}
        offset = g.offset
        for i, c in g.linear.items():
            offset += c
            lin[i] = lin.get(i, 0.0) - 2 * c
        for (i, j), c in g.quadratic.items():
            offset += c
            lin[i] = lin.get(i, 0.0) - 2 * c
            lin[j] = lin.get(j, 0.0) - 2 * c
            quad[(i, j)] = 4 * c
        groups[tag] = TermGroup(lin, quad, offset)
    return QuboModel(model.num_vars, groups, model.labels)


# ---------------------------------------------------------------------------
# routing instances


@dataclass(frozen=True, eq=False)
class VrpInstance:
    """Depot at ``coords[0]``, customers at ``coords[1:]``, ``A`` vehicles."""

    coords: tuple[tuple[int, int], ...]
    A: int
    seed: int | None = None

    def __post_init__(self):
        coords = tuple((int(x), int(y)) for x, y in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 1:
            raise InvalidInstanceError("an instance needs at least the depot")

    def __eq__(self, other):
        if not isinstance(other, VrpInstance):
            return NotImplemented
        return (self.coords, self.A, self.seed) == (other.coords, other.A, other.seed)

    def __hash__(self):
        return hash((self.coords, self.A, self.seed))

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    @cached_property
    def w(self) -> np.ndarray:
        pts = np.asarray(self.coords, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=-1))

    @property
    def W(self) -> float:
        return float(self.w.max())

    @property
    def num_vars(self) -> int:
        return self.A * (self.n + 1) ** 2

    def var_index(self, a: int, i: int, s: int) -> int:
        m = self.n + 1
        return (a * m + i) * m + s

    def to_json(self) -> dict:
        return {"seed": self.seed, "coords": [list(c) for c in self.coords], "A": self.A}

    @classmethod
    def from_json(cls, data: Mapping) -> VrpInstance:
        return cls(tuple(tuple(c) for c in data["coords"]), int(data["A"]), data.get("seed"))


def _add_square_penalty(linear: dict, quadratic: dict, variables: Sequence[int]) -> float:
    """Accumulate ``(1 - sum x_v)^2`` for binary ``x``; returns its constant."""
    for v in variables:
        linear[v] = linear.get(v, 0.0) - 1.0
    for u, v in combinations(variables, 2):
        key = (u, v) if u < v else (v, u)
        quadratic[key] = quadratic.get(key, 0.0) + 2.0
    return 1.0


def _scaled(lin, quad, offset, weight) -> TermGroup:
    return TermGroup({k: weight * v for k, v in lin.items()},
                     {k: weight * v for k, v in quad.items()}, weight * offset)


def build_vrp_qubo(instance: VrpInstance, penalty: float = 1.0) -> QuboModel:
    """Routing QUBO over ``x[a, i, s]`` with vehicle, step and visit terms.

    Groups: ``vehicle(a)`` holds the travel cost of vehicle ``a`` (transitions
    from step ``s`` to ``s + 1`` for ``s < n``, distances divided by the
    largest distance), ``vehicle(a)/penalty`` the one-location-per-step
    constraints of that vehicle, and ``coupling/penalty`` the
    visit-each-customer-once constraints that tie vehicles together.
    """
    n, A = instance.n, instance.A
    if n < 1 or A < 1:
        raise InvalidInstanceError(f"need n >= 1 and A >= 1, got n={n}, A={A}")
    W = instance.W
    if W <= 0:
        raise InvalidInstanceError("all locations coincide; the distance scale is zero")
    w = instance.w
    idx = instance.var_index
    groups: dict[Tag, TermGroup] = {}
    for a in range(A):
        cost: dict[tuple[int, int], float] = {}
        for s in range(n):
            for i in range(n + 1):
                for j in range(n + 1):
                    if i != j and w[i, j] != 0.0:
                        cost[(idx(a, i, s), idx(a, j, s + 1))] = w[i, j] / W
        groups[Tag.vehicle(a)] = TermGroup({}, cost, 0.0)

        lin: dict[int, float] = {}
        quad: dict[tuple[int, int], float] = {}
        offset = 0.0
        for s in range(n + 1):
            offset += _add_square_penalty(lin, quad, [idx(a, i, s) for i in range(n + 1)])
        groups[Tag.vehicle(a, penalty=True)] = _scaled(lin, quad, offset, penalty)

    lin, quad, offset = {}, {}, 0.0
    for i in range(1, n + 1):
        offset += _add_square_penalty(
            lin, quad, [idx(a, i, s) for a in range(A) for s in range(n + 1)])
    groups[Tag.coupling()] = _scaled(lin, quad, offset, penalty)

    labels = [VarLabel(a, i, s) for a in range(A) for i in range(n + 1) for s in range(n + 1)]
    return QuboModel(instance.num_vars, groups, labels)


@dataclass
class RouteSolution:
    """Decoded routing assignment.

    ``routes[a][s]`` lists the locations vehicle ``a`` occupies at step ``s``
    (exactly one when the assignment is feasible).
    """

    routes: list[list[list[int]]]
    feasible: bool
    violated_constraints: list[tuple]

    @property
    def paths(self) -> list[list[int]]:
        """One location per step for each vehicle; only defined when feasible."""
        if not all(len(loc) == 1 for route in self.routes for loc in route):
            raise ValidationError("assignment is not one-hot per step")
        return [[loc[0] for loc in route] for route in self.routes]


def decode_vrp(x, instance: VrpInstance) -> RouteSolution:
    """Read routes off an assignment and list violated constraints.

    Constraint ids are ``("onehot", a, s)`` and ``("visit", i)``.
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != instance.num_vars:
        raise DimensionError(f"assignment length {x.shape[0]} != {instance.num_vars}")
    n, A = instance.n, instance.A
    cube = x.reshape(A, n + 1, n + 1)  # [a, i, s]
    routes = [[[int(i) for i in np.flatnonzero(cube[a, :, s])] for s in range(n + 1)]
              for a in range(A)]
    violated: list[tuple] = []
    for a in range(A):
        for s in range(n + 1):
            if cube[a, :, s].sum() != 1:
                violated.append(("onehot", a, s))
    for i in range(1, n + 1):
        if cube[:, i, :].sum() != 1:
            violated.append(("visit", i))
    return RouteSolution(routes, not violated, violated)


def encode_routes(instance: VrpInstance, paths: Sequence[Sequence[int]]) -> np.ndarray:
    """Assignment for per-vehicle paths of ``n + 1`` locations each."""
    n, A = instance.n, instance.A
    if len(paths) != A or any(len(p) != n + 1 for p in paths):
        raise DimensionError(f"need {A} paths of {n + 1} steps")
    x = np.zeros(instance.num_vars, dtype=np.int8)
    for a, path in enumerate(paths):
        for s, i in enumerate(path):
            x[instance.var_index(a, int(i), s)] = 1
    return x


def route_cost(instance: VrpInstance, paths: Sequence[Sequence[int]]) -> float:
    """Normalised travel cost of step-indexed paths."""
    w, W = instance.w, instance.W
    return float(sum(w[p[s], p[s + 1]] for p in paths for s in range(len(p) - 1)) / W)


def feasible_for_slice(slice_model: QuboModel, x, atol: float = 1e-9) -> bool:
    """True when every penalty group of the model vanishes at ``x``."""
    x = _check_assignment(slice_model, x)
    values = x.astype(np.int64)
    return all(abs(_group_energy(g, values)) <= atol
               for t, g in slice_model.groups.items() if t.penalty)


def penalty_energies(model: _Model, bits) -> np.ndarray:
    """Summed penalty-group energy for each row of ``bits``."""
    tags = model.select_tags(penalty=True)
    if not tags:
        return np.zeros(np.asarray(bits).shape[0])
    return model.restrict(tags).energies(bits)


# ---------------------------------------------------------------------------
# MaxCut


def build_maxcut_ising(edges: Iterable[tuple[int, int]], num_nodes: int | None = None,
                       ferromagnetic: bool = False) -> IsingModel:
    """Ising model whose minimum is the maximum cut: ``sum_(i,j) s_i s_j``.

    ``ferromagnetic=True`` flips every coupling to ``-1``; the minimum is then the
    ferromagnetic (uncut) state instead.
    """
    seen = set()
    quadratic = {}
    edges = [tuple(int(v) for v in e) for e in edges]
    for i, j in edges:
        if i == j:
            raise ValidationError(f"self-loop on node {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValidationError(f"duplicate edge {key}")
        seen.add(key)
        quadratic[key] = -1.0 if ferromagnetic else 1.0
    if num_nodes is None:
        num_nodes = 1 + max((max(e) for e in edges), default=-1)
    return IsingModel.from_terms(num_nodes, {}, quadratic)


def cut_size(edges: Iterable[tuple[int, int]], x) -> int:
    return sum(int(x[i] != x[j]) for i, j in edges)


# ---------------------------------------------------------------------------
# exhaustive oracle


class BruteForceResult(NamedTuple):
    energy: float
    argmin: np.ndarray
    degeneracy: int


def _reverse_bits(z: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(z)
    for i in range(n):
        out |= ((z >> i) & 1) << (n - 1 - i)
    return out


def brute_force_min(model: _Model, max_vars: int = BRUTE_FORCE_MAX_VARS,
                    feasible_only: bool = False) -> BruteForceResult:
    """Exact minimum by enumerating every assignment.

    Ties go to the lexicographically smallest bitstring ``x_0 x_1 ...``;
    ``degeneracy`` counts assignments within a relative 1e-9 of the minimum.
    With ``feasible_only`` the minimum runs over assignments on which every
    penalty group vanishes.
    """
    n = model.num_vars
    if n > max_vars:
        raise SizeError(f"{n} variables exceeds the brute-force cap of {max_vars}")
    if n == 0:
        return BruteForceResult(model.offset, np.zeros(0, dtype=np.int8), 1)
    penalties = model.restrict(model.select_tags(penalty=True)) if feasible_only else None
    best = math.inf
    count = 0
    first = None
    for start, energies in _table_chunks(model):
        if penalties is not None:
            _, pen = next(_table_chunks(penalties, start=start))
            energies = np.where(np.abs(pen) <= 1e-9, energies, np.inf)
            if not np.isfinite(energies).any():
                continue
        low = float(energies.min())
        if low < best:
            if low < best - _DEGENERACY_RTOL * max(1.0, abs(low)):
                count, first = 0, None
            best = low
        hits = np.flatnonzero(energies <= best + _DEGENERACY_RTOL * max(1.0, abs(best))) + start
        if hits.size:
            count += int(hits.size)
            cand = int(hits[np.argmin(_reverse_bits(hits, n))])
            if first is None or _reverse_bits(np.array([cand]), n)[0] < _reverse_bits(np.array([first]), n)[0]:
                first = cand
    if first is None:
        raise ValidationError("no feasible assignment exists")
    return BruteForceResult(best, index_to_bits(first, n), count)


# ---------------------------------------------------------------------------
# serialisation


def _group_to_json(g: TermGroup) -> dict:
    return {
        "linear": {str(i): c for i, c in g.linear.items()},
        "quadratic": [[i, j, c] for (i, j), c in g.quadratic.items()],
        "offset": g.offset,
    }


def _group_from_json(data: Mapping) -> TermGroup:
    return TermGroup(
        {int(i): float(c) for i, c in data.get("linear", {}).items()},
        {(int(i), int(j)): float(c) for i, j, c in data.get("quadratic", [])},
        float(data.get("offset", 0.0)),
    )


def model_to_json(model: _Model) -> dict:
    """JSON-ready dict; ``tags`` is authoritative, the aggregate fields are derived."""
    return {
        "kind": "ising" if model.spin else "qubo",
        "num_vars": model.num_vars,
        **_group_to_json(TermGroup(model.linear, model.quadratic, model.offset)),
        "tags": [{"tag": t.to_json(), **_group_to_json(g)} for t, g in model.groups.items()],
        "labels": None if model.labels is None else [list(lab) for lab in model.labels],
    }


def model_from_json(data: Mapping) -> QuboModel | IsingModel:
    cls = IsingModel if data.get("kind") == "ising" else QuboModel
    if data.get("tags"):
        groups = {Tag.from_json(entry["tag"]): _group_from_json(entry) for entry in data["tags"]}
    else:
        groups = {OBJECTIVE: _group_from_json(data)}
    return cls(int(data["num_vars"]), groups, data.get("labels"))


def dumps_model(model: _Model) -> str:
    return json.dumps(model_to_json(model), indent=1)


def loads_model(text: str) -> QuboModel | IsingModel:
    return model_from_json(json.loads(text))
