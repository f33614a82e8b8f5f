"""Parallel QAOA on sliced QUBO models.

The main entry points:

* :mod:`pqaoa.model` builds tagged QUBO and Ising models (routing, MaxCut),
  evaluates them and provides brute-force oracles.
* :mod:`pqaoa.slicing` splits a model into classically separable slices.
* :mod:`pqaoa.sim` is a statevector simulator for QAOA and HEA circuits.
* :mod:`pqaoa.trainer` trains full, multi-angle and single-slice QAOA.
* :mod:`pqaoa.instances` generates routing instances and classical baselines.
* :mod:`pqaoa.bench` and the ``pqaoa`` command run reproducible sweeps.
"""

from __future__ import annotations

from .exceptions import (DimensionError, InvalidInstanceError, NotSeparableError, OptimizerAbort, PqaoaError,
                         RecombinationCapError, SizeError, ValidationError)
from .instances import (GeneratorConfig, approximation_ratio, feasible_ratio, generate_vrp, heuristic_baseline,
                        optimal_reference, route_enum_optimal)
from .model import (IsingModel, QuboModel, RouteSolution, Tag, TermGroup, VrpInstance, brute_force_min,
                    build_maxcut_ising, build_vrp_qubo, decode_vrp, evaluate, feasible_for_slice, ising_to_qubo,
                    qubo_to_ising)
from .optimize import OptimizerSettings, TrainingTrace, minimize
from .pareto import dominates, knee_index, pareto_front, pareto_indices
from .sim import (DiagonalHamiltonian, HeaParams, QaoaParams, SampleSet, dense_oracle, exact_expectation,
                  run_hea, run_qaoa, sample)
from .slicing import (SliceDecomposition, build_interaction_graph, connected_components, decompose,
                      decompose_by_edge_cut, find_bridges, slices_identical)
from .trainer import (AngleSet, TrainingConfig, final_solution, objective_mean_energy, recombine, subsample,
                      train_multi_angle_pqaoa, train_multi_objective, train_qaoa, train_single_slice_pqaoa,
                      transfer_evaluate)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_") and name not in ("annotations",)]
