from __future__ import annotations

import numpy as np
import pytest

from conftest import random_qubo
from pqaoa.exceptions import DimensionError, SizeError, ValidationError
from pqaoa.model import QuboModel, build_maxcut_ising
from pqaoa.sim import (DiagonalHamiltonian, HeaParams, QaoaParams, SampleSet, apply_mixer, apply_phase_separator,
                       dense_oracle, exact_expectation, fidelity, hea_circuit, init_plus, probabilities, run_hea,
                       run_qaoa, sample)


def random_params(rng, p: int) -> QaoaParams:
    return QaoaParams(rng.uniform(-np.pi, np.pi, p), rng.uniform(-np.pi, np.pi, p))


class TestParams:
    def test_lengths_must_match(self):
        with pytest.raises(DimensionError):
            QaoaParams([0.1, 0.2], [0.3])
        with pytest.raises(DimensionError):
            QaoaParams([], [])

    def test_extended_appends_zero_layers(self):
        q = QaoaParams([0.1], [0.2]).extended(2)
        assert list(q.gamma) == [0.1, 0, 0] and list(q.beta) == [0.2, 0, 0]

    def test_hea_shape(self):
        with pytest.raises(DimensionError):
            HeaParams(np.zeros(3))
        assert HeaParams(np.zeros((2, 3))).L == 2


class TestHamiltonian:
    def test_from_model(self, rng):
        m = random_qubo(rng, 4)
        H = DiagonalHamiltonian.from_model(m)
        assert H.energies[0b0101] == pytest.approx(m.energies(np.array([[1, 0, 1, 0]]))[0])

    def test_rejects_wrong_length_and_cap(self, rng):
        with pytest.raises(DimensionError):
            DiagonalHamiltonian(2, np.zeros(3))
        with pytest.raises(SizeError):
            DiagonalHamiltonian.from_model(random_qubo(rng, 6), max_qubits=5)


class TestQaoa:
    def test_zero_angles_give_uniform_state(self, rng):
        H = DiagonalHamiltonian.from_model(random_qubo(rng, 5))
        state = run_qaoa(H, QaoaParams.zeros(2))
        assert np.allclose(probabilities(state), 1 / 32)

    def test_norm_preserved(self, rng):
        H = DiagonalHamiltonian.from_model(random_qubo(rng, 7))
        state = run_qaoa(H, random_params(rng, 3))
        assert np.linalg.norm(state) == pytest.approx(1.0, abs=1e-12)

    def test_mixer_on_single_qubit(self):
        beta = 0.4
        out = apply_mixer(np.array([1, 0], dtype=complex), beta)
        assert np.allclose(out, [np.cos(beta), -1j * np.sin(beta)])

    def test_mixer_does_not_modify_input(self):
        state = init_plus(3)
        copy = state.copy()
        apply_mixer(state, 0.7)
        assert np.array_equal(state, copy)

    def test_phase_separator(self):
        H = DiagonalHamiltonian(1, np.array([0.0, 2.0]))
        out = apply_phase_separator(np.array([1, 1], dtype=complex), H, 0.5)
        assert np.allclose(out, [1, np.exp(-1j)])

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_matches_dense_oracle(self, rng, n):
        m = random_qubo(rng, n)
        params = random_params(rng, 2)
        state = run_qaoa(DiagonalHamiltonian.from_model(m), params)
        assert fidelity(state, dense_oracle(m, params)) >= 1 - 1e-10

    def test_ising_model_matches_oracle(self, rng):
        m = build_maxcut_ising([(0, 1), (1, 2), (2, 3), (0, 3)])
        params = random_params(rng, 3)
        state = run_qaoa(DiagonalHamiltonian.from_model(m), params)
        assert fidelity(state, dense_oracle(m, params)) >= 1 - 1e-10

    def test_exact_expectation(self, rng):
        m = random_qubo(rng, 4)
        H = DiagonalHamiltonian.from_model(m)
        state = run_qaoa(H, random_params(rng, 1))
        expected = sum(abs(state[z]) ** 2 * H.energies[z] for z in range(16))
        assert exact_expectation(state, H) == pytest.approx(expected)

    def test_oracle_cap(self):
        with pytest.raises(SizeError):
            dense_oracle(QuboModel.from_terms(11), QaoaParams.zeros(1))


class TestHea:
    def test_gate_list(self):
        gates = hea_circuit(3, HeaParams(np.full((1, 3), 0.5)))
        assert gates == [("ry", 0, 0.5), ("ry", 1, 0.5), ("ry", 2, 0.5), ("cz", 0, 1), ("cz", 1, 2)]

    def test_ry_pi_flips(self):
        state = run_hea(1, HeaParams([[np.pi]]))
        assert np.allclose(abs(state), [0, 1])

    @pytest.mark.parametrize("n,L", [(1, 1), (2, 2), (3, 1), (3, 2)])
    def test_matches_dense_oracle(self, rng, n, L):
        params = HeaParams(rng.uniform(-np.pi, np.pi, (L, n)))
        assert fidelity(run_hea(n, params), dense_oracle(None, params, "hea")) >= 1 - 1e-10

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            run_hea(3, HeaParams(np.zeros((1, 2))))


class TestSampling:
    def test_seeded_reproducible(self, rng):
        state = run_qaoa(DiagonalHamiltonian.from_model(random_qubo(rng, 6)), random_params(rng, 1))
        a, b = sample(state, 500, 7), sample(state, 500, 7)
        assert np.array_equal(a.states, b.states) and np.array_equal(a.counts, b.counts)
        assert a.shots == 500

    def test_basis_state_always_sampled(self):
        state = np.zeros(8, dtype=complex)
        state[5] = 1
        s = sample(state, 100, 0)
        assert s.to_dict() == {"101": 100}

    def test_frequencies_follow_probabilities(self):
        state = np.sqrt(np.array([0.1, 0.2, 0.3, 0.4], dtype=complex))
        s = sample(state, 200_000, 1)
        freq = np.zeros(4)
        freq[s.states] = s.counts / s.shots
        assert np.allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.005)

    def test_invalid_shots(self):
        with pytest.raises(ValidationError):
            sample(init_plus(2), 0, 0)


class TestSampleSet:
    def test_merges_duplicates_and_sorts(self):
        s = SampleSet(3, np.array([4, 1, 4]), np.array([1, 2, 3]))
        assert list(s.states) == [1, 4] and list(s.counts) == [2, 4]

    def test_bitstring_order(self):
        s = SampleSet.from_dict({"100": 3, "011": 1})
        assert list(s.states) == [1, 6]
        assert s.bits().tolist() == [[1, 0, 0], [0, 1, 1]]
        assert s.to_dict() == {"100": 3, "011": 1}

    def test_expanded(self):
        assert SampleSet.from_states(2, [3, 1, 3]).expanded().tolist() == [1, 3, 3]

    def test_validation(self):
        with pytest.raises(ValidationError):
            SampleSet(2, np.array([0]), np.array([0]))
        with pytest.raises(DimensionError):
            SampleSet.from_dict({"1": 1, "10": 1})
