"""Ensemble search for the nonclassicality upper bound."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonclassicality.fock_core import quadrature
from nonclassicality.qfi import Support, ensemble_objective, metrological_power, pure_nonclassicality, qfi_generator
from nonclassicality.roof import (
    EnsembleDecomposition,
    RoofObjective,
    check_isometry,
    ensemble_from_isometry,
    extended_state_qfi,
    minimize_nonclassicality,
    random_isometry,
)
from nonclassicality.states import mix, prepare_pure, rho_p

from conftest import random_pure


def random_mixed(rng, rank=3, occupied=6):
    members = [random_pure(rng, occupied) for _ in range(rank)]
    return mix(list(zip(rng.dirichlet(np.ones(rank)), members)))


class TestIsometries:
    @pytest.mark.parametrize("m, r", [(2, 2), (4, 2), (5, 3)])
    def test_random_isometry(self, m, r, rng):
        U = random_isometry(m, r, rng)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(r), atol=1e-12)

    def test_rejects_non_isometry(self):
        with pytest.raises(ValueError):
            check_isometry(np.ones((3, 2)))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.integers(0, 3))
    def test_every_isometry_reconstructs(self, seed, extra):
        rng = np.random.default_rng(seed)
        rho = random_mixed(rng)
        U = random_isometry(3 + extra, 3, rng)
        ens = ensemble_from_isometry(rho, U)
        assert ens.reconstruction_error(rho) < 1e-12
        assert ens.weights.sum() == pytest.approx(1.0)

    def test_rank_mismatch(self, rng):
        with pytest.raises(ValueError):
            ensemble_from_isometry(rho_p(0.5), random_isometry(3, 3, rng))


class TestObjective:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_frame_objective_matches_member_moments(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_mixed(rng)
        U = random_isometry(4, 3, rng)
        obj = RoofObjective(Support.of(rho))
        ens = ensemble_from_isometry(rho, U)
        n_obj, v1_obj = ensemble_objective(ens.weights, ens.members)
        assert obj.value(U) == pytest.approx(n_obj, abs=1e-10)
        assert obj.v1_value(U) == pytest.approx(v1_obj, abs=1e-10)
        assert metrological_power(rho) <= obj.value(U) + 1e-10

    def test_identity_gives_eigen_ensemble(self):
        # rho(1/4) = 3/4 |0><0| + 1/4 |1><1|: members are Fock states
        obj = RoofObjective(Support.of(rho_p(0.25)))
        assert obj.value(np.eye(2, dtype=complex)) == pytest.approx(0.25)


class TestSearch:
    def test_pure_state_short_circuit(self):
        psi = prepare_pure("cat:-:1")
        res = minimize_nonclassicality(psi)
        assert res.N_upper == pytest.approx(pure_nonclassicality(psi).N, abs=1e-12)
        assert res.W_lower == pytest.approx(res.N_upper, abs=1e-10)

    def test_coherent_mixture_is_classical(self):
        rho = mix([(0.5, prepare_pure("coherent:1", 20)), (0.5, prepare_pure("coherent:-1", 20))])
        res = minimize_nonclassicality(rho, restarts=8)
        assert res.N_upper <= 1e-6
        assert res.W_lower == pytest.approx(0.0, abs=1e-12)

    def test_mixture_beats_eigen_ensemble(self):
        res = minimize_nonclassicality(rho_p(0.25), restarts=9)
        assert res.W_lower == 0.0
        assert res.N_upper < 0.25 - 0.1
        # more members than the rank help here
        assert res.best_by_m[3] < res.best_by_m[2]

    def test_deterministic_for_seed(self):
        rho = random_mixed(np.random.default_rng(7), rank=2)
        a = minimize_nonclassicality(rho, restarts=4, seed=3)
        b = minimize_nonclassicality(rho, restarts=4, seed=3)
        assert a.N_upper == b.N_upper
        np.testing.assert_array_equal(a.best_ensemble.weights, b.best_ensemble.weights)

    def test_bracket_and_reconstruction(self, rng):
        rho = random_mixed(rng, rank=2)
        res = minimize_nonclassicality(rho, restarts=6)
        assert res.W_lower <= res.N_upper + 1e-9
        assert res.best_ensemble.reconstruction_error(rho) < 1e-10
        n_obj, _ = ensemble_objective(res.best_ensemble.weights, res.best_ensemble.members)
        assert n_obj == pytest.approx(res.N_upper, abs=1e-10)

    def test_to_dict(self):
        d = minimize_nonclassicality(rho_p(0.75), restarts=3).to_dict()
        assert set(d) >= {"N_upper", "W_lower", "best_by_m", "best_ensemble", "converged"}


class TestExtendedState:
    @pytest.mark.parametrize("mu", [0.0, 0.7, math.pi / 2])
    def test_flagged_equals_weighted_variance(self, mu, rng):
        rho = random_mixed(rng)
        ens = ensemble_from_isometry(rho, random_isometry(4, 3, rng))
        flagged, direct = extended_state_qfi(ens, mu)
        assert flagged == pytest.approx(direct, abs=1e-10)

    def test_flagged_bounds_plain_qfi(self, rng):
        rho = random_mixed(rng)
        ens = ensemble_from_isometry(rho, random_isometry(3, 3, rng))
        flagged, _ = extended_state_qfi(ens, 0.4)
        assert qfi_generator(rho, quadrature(rho.dim, 0.4)) <= flagged + 1e-10

    def test_member_basis_must_match(self):
        ens = EnsembleDecomposition(
            np.array([0.5, 0.5]), (prepare_pure("fock:1", 5), prepare_pure("fock:1", 6))
        )
        with pytest.raises(ValueError):
            extended_state_qfi(ens, 0.0)
