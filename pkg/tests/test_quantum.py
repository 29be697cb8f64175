import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qreplicator.errors import DimensionError, IntegrationError, InvalidStateError
from qreplicator.info import shannon_entropy
from qreplicator.integrate import IntegratorConfig
from qreplicator.lax import freq_matrices_from_trajectory, freq_matrix, lambda_matrix
from qreplicator.quantum import (
    Hamiltonian,
    as_density,
    density_from_ensemble,
    evolve,
    evolve_self_consistent,
    evolve_self_consistent_many,
    hamiltonian_from_lambda,
    quantize,
    self_consistent_rhs,
    vn_entropy_rate_exact,
    vn_entropy_rate_series,
    von_neumann_entropy,
    von_neumann_rhs,
)
from qreplicator.replicator import integrate, replicator_rhs

from conftest import HAWK_DOVE, PD, random_game, random_interior


def random_hermitian(rng, n, scale=1.0):
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (M + M.conj().T) / 2


def random_density(rng, n, rank=None):
    rank = rank or n
    psi = rng.normal(size=(rank, n)) + 1j * rng.normal(size=(rank, n))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return density_from_ensemble(psi, rng.dirichlet(np.ones(rank)))


def loop_series(rho, drho):
    """Index-by-index evaluation of the truncated entropy-rate sum."""
    n = rho.shape[0]
    r = range(n)
    t1 = sum(drho[i, i] for i in r)
    t2 = sum(rho[i, j] * drho[j, i] for i in r for j in r)
    t3 = sum(rho[i, j] * rho[j, k] * drho[k, i] for i in r for j in r for k in r)
    t4 = sum(rho[i, j] * rho[j, k] * rho[k, l] * drho[l, i] for i in r for j in r for k in r for l in r)
    return (11 / 6 * t1 - 6 * t2 + 4.5 * t3 - 4 / 3 * t4).real


class TestEnsemble:
    def test_single_state(self):
        rho = density_from_ensemble([[1, 0, 0]], [1.0])
        assert np.array_equal(rho, np.diag([1, 0, 0]).astype(complex))

    def test_orthogonal_pair(self):
        rho = density_from_ensemble([[1, 0], [0, 1]], [0.5, 0.5])
        assert np.array_equal(rho, np.diag([0.5, 0.5]).astype(complex))

    def test_overlapping_pair(self):
        s = 2**-0.5
        rho = density_from_ensemble([[1, 0], [s, s]], [0.5, 0.5])
        np.testing.assert_allclose(rho, [[0.75, 0.25], [0.25, 0.25]], atol=1e-15)

    def test_rejects_unnormalized_state(self):
        with pytest.raises(InvalidStateError, match="norm"):
            density_from_ensemble([[1, 1]], [1.0])

    def test_rejects_bad_probabilities(self):
        with pytest.raises(InvalidStateError):
            density_from_ensemble([[1, 0], [0, 1]], [0.7, 0.7])

    def test_random_ensembles_are_valid(self, rng):
        for n in (2, 3, 5):
            rho = random_density(rng, n)
            assert np.max(np.abs(rho - rho.conj().T)) <= 1e-12
            assert abs(np.trace(rho) - 1) <= 1e-12
            assert np.linalg.eigvalsh(rho)[0] >= -1e-10
            assert np.trace(rho @ rho).real <= 1 + 1e-10


class TestAsDensity:
    @pytest.mark.parametrize(
        "rho, match",
        [
            ([[0.5, 0.1], [0.2, 0.5]], "Hermitian"),
            ([[0.6, 0.0], [0.0, 0.6]], "trace"),
            ([[1.5, 0.0], [0.0, -0.5]], "negative"),
            ([[1.0, 0.0, 0.0]], "square"),
        ],
    )
    def test_rejects(self, rho, match):
        with pytest.raises((InvalidStateError, DimensionError), match=match):
            as_density(rho)


class TestQuantize:
    def test_vertex(self):
        assert np.array_equal(quantize([1.0, 0.0, 0.0]), np.diag([1.0, 0, 0]).astype(complex))

    def test_uniform_pair(self):
        np.testing.assert_allclose(quantize([0.5, 0.5]), np.full((2, 2), 0.5), atol=1e-16)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_pure_with_shannon_diagonal(self, n, seed):
        x = np.random.default_rng(seed).dirichlet(np.ones(n))
        rho = quantize(x)
        assert abs(np.trace(rho @ rho).real - 1) <= 1e-12
        assert von_neumann_entropy(rho) <= 1e-6
        assert shannon_entropy(np.diag(rho).real) == pytest.approx(shannon_entropy(x), abs=1e-12)


class TestHamiltonian:
    def test_zero(self):
        H = hamiltonian_from_lambda(np.zeros((3, 3)))
        assert np.array_equal(H.matrix, np.zeros((3, 3)))

    def test_prisoners_dilemma(self):
        H = hamiltonian_from_lambda(lambda_matrix([0.5, 0.5], PD))
        assert H.matrix[0, 1] == pytest.approx(-0.375j, abs=1e-15)
        assert H.matrix[1, 0] == pytest.approx(0.375j, abs=1e-15)

    def test_hbar_scales(self):
        L = lambda_matrix([0.5, 0.5], PD)
        np.testing.assert_allclose(hamiltonian_from_lambda(L, 2.0).matrix, 2j * L)

    def test_spectrum_is_real(self, rng):
        for n in (2, 3, 6):
            M = rng.normal(size=(n, n))
            H = hamiltonian_from_lambda(M - M.T)
            assert np.max(np.abs(np.linalg.eigvals(H.matrix).imag)) <= 1e-12

    def test_rejects_symmetric_input(self):
        with pytest.raises(ValueError, match="antisymmetric"):
            hamiltonian_from_lambda([[0.0, 1.0], [1.0, 0.0]])

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            Hamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_nonpositive_hbar(self):
        with pytest.raises(ValueError):
            Hamiltonian(np.eye(2), hbar=0.0)


class TestVonNeumannRhs:
    def test_commuting_pair(self):
        assert np.array_equal(von_neumann_rhs(np.diag([0.3, 0.7]), Hamiltonian(np.diag([1.0, -2.0]))), np.zeros((2, 2)))

    def test_maximally_mixed(self, rng):
        rhs = von_neumann_rhs(np.eye(3) / 3, Hamiltonian(random_hermitian(rng, 3)))
        np.testing.assert_allclose(rhs, 0.0, atol=1e-16)

    def test_lambda_hamiltonian_reproduces_commutator(self, rng):
        A = random_game(rng, 3)
        x = random_interior(rng, 3)
        L = lambda_matrix(x, A)
        for hbar in (1.0, 0.25):
            rhs = von_neumann_rhs(quantize(x), hamiltonian_from_lambda(L, hbar))
            X = freq_matrix(x)
            np.testing.assert_allclose(rhs, L @ X - X @ L, atol=1e-14)

    def test_diagonal_is_replicator_velocity(self):
        x = [0.5, 0.5]
        rhs = von_neumann_rhs(quantize(x), hamiltonian_from_lambda(lambda_matrix(x, PD)))
        np.testing.assert_allclose(np.diag(rhs).real, replicator_rhs(x, PD), atol=1e-12)
        assert np.max(np.abs(np.diag(rhs).imag)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_hermitian_and_traceless(self, n, seed):
        rng = np.random.default_rng(seed)
        out = von_neumann_rhs(random_density(rng, n), Hamiltonian(random_hermitian(rng, n)))
        assert np.max(np.abs(out - out.conj().T)) <= 1e-12
        assert abs(np.trace(out)) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            von_neumann_rhs(np.eye(2) / 2, Hamiltonian(np.eye(3)))

    def test_self_consistent_rhs_matches_lambda_form(self, rng):
        A = random_game(rng, 4)
        x = random_interior(rng, 4)
        H = hamiltonian_from_lambda(lambda_matrix(x, A), 3.0)
        np.testing.assert_allclose(self_consistent_rhs(quantize(x), A), von_neumann_rhs(quantize(x), H), atol=1e-14)


class TestEvolve:
    def test_zero_hamiltonian(self, rng):
        rho0 = random_density(rng, 3)
        tr = evolve(rho0, Hamiltonian(np.zeros((3, 3))), IntegratorConfig(dt=0.1, t_end=2.0))
        np.testing.assert_allclose(tr.states, np.broadcast_to(rho0, tr.states.shape), rtol=0, atol=1e-15)

    def test_diagonal_pair_is_stationary(self):
        rho0 = np.diag([0.2, 0.3, 0.5])
        tr = evolve(rho0, Hamiltonian(np.diag([1.0, -1.0, 3.0])), IntegratorConfig(dt=0.1, t_end=2.0))
        np.testing.assert_allclose(tr.states, np.broadcast_to(rho0, tr.states.shape), rtol=0, atol=1e-15)

    def test_unitary_invariants(self, rng):
        n = 4
        rho0 = random_density(rng, n)
        H = Hamiltonian(random_hermitian(rng, n))
        tr = evolve(rho0, H, IntegratorConfig("rk4", 1e-3, 10.0, renormalize=False))
        lam0 = np.linalg.eigvalsh(rho0)
        assert tr.trace_drift.max() <= 1e-7
        assert np.max(np.abs(tr.purity - tr.purity[0])) <= 1e-7
        assert np.max(np.abs(np.linalg.eigvalsh(tr.states[::1000]) - lam0)) <= 1e-7
        S = [von_neumann_entropy(r) for r in tr.states[::100]]
        assert np.max(np.abs(np.array(S) - S[0])) <= 1e-6

    def test_matches_exact_propagator(self, rng):
        n = 3
        rho0 = random_density(rng, n)
        Hm = random_hermitian(rng, n)
        tr = evolve(rho0, Hamiltonian(Hm, hbar=0.5), IntegratorConfig("rk4", 1e-3, 2.0))
        w, V = np.linalg.eigh(Hm)
        U = V @ np.diag(np.exp(-1j * w * 2.0 / 0.5)) @ V.conj().T
        np.testing.assert_allclose(tr.final, U @ rho0 @ U.conj().T, atol=1e-9)

    def test_time_dependent_source(self, rng):
        Hm = random_hermitian(rng, 2)
        rho0 = random_density(rng, 2)
        cfg = IntegratorConfig(dt=0.01, t_end=1.0)
        fixed = evolve(rho0, Hamiltonian(Hm), cfg)
        sourced = evolve(rho0, lambda t: Hamiltonian(Hm), cfg)
        assert np.array_equal(fixed.states, sourced.states)

    def test_non_finite_aborts(self):
        H = Hamiltonian(np.array([[0.0, 1e308], [1e308, 0.0]]))
        with pytest.raises(IntegrationError) as info:
            evolve(np.diag([0.7, 0.3]), H, IntegratorConfig("euler", 1.0, 3.0))
        assert info.value.time > 0

    def test_hawk_dove_self_consistent(self):
        cfg = IntegratorConfig("rk4", 1e-3, 10.0)
        rho = evolve_self_consistent(quantize([0.9, 0.1]), HAWK_DOVE, cfg)
        vec = integrate([0.9, 0.1], HAWK_DOVE, cfg)
        assert np.max(np.abs(rho.diagonals - vec.states)) <= 1e-5

    def test_self_consistent_correspondence(self, rng):
        cfg = IntegratorConfig("rk4", 1e-3, 10.0)
        As = [random_game(rng, 3) for _ in range(3)]
        x0s = [random_interior(rng, 3) for _ in range(3)]
        trajs = evolve_self_consistent_many([quantize(x) for x in x0s], As, cfg)
        for tr, x0, A in zip(trajs, x0s, As):
            X = freq_matrices_from_trajectory(integrate(x0, A, cfg))
            assert np.max(np.abs(tr.states - X)) <= 1e-5
            assert np.max(np.abs(tr.purity - 1.0)) <= 1e-7
            assert tr.hermiticity.max() <= 1e-12


class TestEntropy:
    def test_pure_state(self, rng):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        assert von_neumann_entropy(np.outer(psi, psi.conj())) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_maximally_mixed(self, n):
        assert von_neumann_entropy(np.eye(n) / n) == pytest.approx(np.log(n), abs=1e-14)

    def test_qubit_example(self):
        assert von_neumann_entropy(np.diag([0.75, 0.25])) == pytest.approx(0.562335144618808350288, abs=1e-15)

    def test_diagonal_equals_shannon(self, rng):
        for n in (2, 3, 6):
            x = rng.dirichlet(np.ones(n))
            assert von_neumann_entropy(np.diag(x)) == pytest.approx(shannon_entropy(x), abs=1e-12)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidStateError):
            von_neumann_entropy(np.diag([1.1, -0.1]))

    def test_clamps_rounding_noise(self):
        assert von_neumann_entropy(np.diag([1.0 + 5e-11, -5e-11])) == 0.0


class TestEntropyRates:
    def test_series_zero_velocity(self, rng):
        assert vn_entropy_rate_series(random_density(rng, 3), np.zeros((3, 3))) == 0.0

    def test_series_matches_loop_oracle(self, rng):
        for rho in (np.eye(3) / 3, random_density(rng, 3), random_density(rng, 4)):
            n = rho.shape[0]
            drho = random_hermitian(rng, n)
            drho -= np.trace(drho) / n * np.eye(n)
            assert vn_entropy_rate_series(rho, drho) == pytest.approx(loop_series(rho, drho), abs=1e-12)

    def test_series_at_maximally_mixed(self, rng):
        n = 3
        drho = random_hermitian(rng, n)
        drho -= np.trace(drho) / n * np.eye(n)
        # every term is Tr(c I drho) = 0 for traceless drho
        assert abs(vn_entropy_rate_series(np.eye(n) / n, drho)) <= 1e-14

    def test_series_counts_trace_term(self):
        # a pure trace velocity at rho = 0 isolates the 11/6 coefficient
        assert vn_entropy_rate_series(np.zeros((2, 2)), np.eye(2)) == pytest.approx(11 / 3)

    def test_rates_vanish_under_unitary_flow(self, rng):
        rho = random_density(rng, 4)
        drho = von_neumann_rhs(rho, Hamiltonian(random_hermitian(rng, 4)))
        assert abs(vn_entropy_rate_exact(rho, drho)) <= 1e-12
        assert abs(vn_entropy_rate_series(rho, drho)) <= 1e-12

    def test_exact_rate_matches_finite_difference(self, rng):
        rho = random_density(rng, 3)
        sigma = random_density(rng, 3)
        drho = sigma - rho
        h = 1e-5
        fd = (von_neumann_entropy(rho + h * drho) - von_neumann_entropy(rho - h * drho)) / (2 * h)
        assert vn_entropy_rate_exact(rho, drho) == pytest.approx(fd, abs=1e-8)

    def test_exact_rate_diagonal_case(self, rng):
        x = rng.dirichlet(np.ones(3))
        dx = rng.normal(size=3)
        dx -= dx.mean()
        expected = -np.sum(dx * (np.log(x) + 1))
        assert vn_entropy_rate_exact(np.diag(x), np.diag(dx)) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            vn_entropy_rate_series(np.eye(2) / 2, np.zeros((3, 3)))
        with pytest.raises(DimensionError):
            vn_entropy_rate_exact(np.eye(2) / 2, np.zeros((3, 3)))
