import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qreplicator.errors import DimensionError, InvalidStateError
from qreplicator.game import (
    Verdict,
    as_strategy,
    average_fitness,
    certify_ess,
    certify_nash,
    expected_payoff,
    fitness,
    pure,
)
from qreplicator.replicator import find_fixed_points

from conftest import HAWK_DOVE, PD, RPS, random_game


def loop_payoff(p, q, A):
    return sum(p[i] * A[i][j] * q[j] for i in range(len(p)) for j in range(len(q)))


class TestStrategyValidation:
    def test_renormalizes_tiny_excess(self):
        x = as_strategy([0.5, 0.5 + 5e-10])
        assert x.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_large_deviation(self):
        with pytest.raises(InvalidStateError):
            as_strategy([0.5, 0.4])

    def test_rejects_negative(self):
        with pytest.raises(InvalidStateError):
            as_strategy([1.1, -0.1])

    def test_dimension_mismatch_names_sizes(self):
        with pytest.raises(DimensionError, match="length 3, expected 2"):
            expected_payoff([1 / 3] * 3, [0.5, 0.5], PD)

    def test_read_only(self):
        x = as_strategy([0.25, 0.75])
        with pytest.raises(ValueError):
            x[0] = 1.0


class TestPayoffs:
    def test_zero_matrix(self):
        assert expected_payoff([0.3, 0.7], [0.6, 0.4], np.zeros((2, 2))) == 0.0

    def test_pure_reads_entry(self):
        assert expected_payoff([1, 0], [1, 0], PD) == 3.0

    def test_hawk_dove_barycenter(self):
        # exact rational evaluation gives 1/2
        assert expected_payoff([0.5, 0.5], [0.5, 0.5], HAWK_DOVE) == pytest.approx(0.5, abs=1e-15)

    def test_fitness_examples(self):
        np.testing.assert_array_equal(fitness([0.5, 0.5], np.zeros((2, 2))), [0, 0])
        np.testing.assert_allclose(fitness([1 / 3] * 3, RPS), [0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(fitness([0.5, 0.5], PD), [1.5, 3.0], atol=1e-15)

    def test_average_fitness_examples(self):
        assert average_fitness([0.2, 0.8], np.zeros((2, 2))) == 0.0
        assert average_fitness([1 / 3] * 3, RPS) == pytest.approx(0.0, abs=1e-15)
        assert average_fitness([0.5, 0.5], PD) == pytest.approx(2.25, abs=1e-15)

    def test_matches_loop_oracle(self, rng):
        for n in (2, 3, 5):
            A = random_game(rng, n)
            p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            assert expected_payoff(p, q, A) == pytest.approx(loop_payoff(p, q, A), abs=1e-12)

    def test_average_is_weighted_fitness(self, rng):
        for _ in range(50):
            n = rng.integers(1, 7)
            A = random_game(rng, n)
            x = rng.dirichlet(np.ones(n))
            assert abs(average_fitness(x, A) - x @ fitness(x, A)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(2, 5).flatmap(
            lambda n: st.tuples(
                arrays(float, (n, n), elements=st.floats(-10, 10)),
                arrays(float, n, elements=st.floats(0.01, 1)),
                arrays(float, n, elements=st.floats(0.01, 1)),
                arrays(float, n, elements=st.floats(0.01, 1)),
                st.floats(0, 1),
            )
        )
    )
    def test_bilinear(self, args):
        A, p1, p2, q, alpha = args
        p1, p2, q = p1 / p1.sum(), p2 / p2.sum(), q / q.sum()
        mix = alpha * p1 + (1 - alpha) * p2
        lhs = expected_payoff(mix / mix.sum(), q, A)
        rhs = alpha * expected_payoff(p1, q, A) + (1 - alpha) * expected_payoff(p2, q, A)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(A).max())


class TestCertification:
    def test_pd_defect_strict(self):
        assert certify_nash([0, 1], PD).verdict is Verdict.STRICT_NASH
        assert certify_ess([0, 1], PD).verdict is Verdict.ESS

    def test_pd_cooperate_rejected(self):
        rep = certify_nash([1, 0], PD)
        assert rep.verdict is Verdict.NONE
        assert rep.worst_deviation == 2.0
        assert [w.strategy for w in rep.witnesses] == [1]

    def test_rps_barycenter(self):
        assert certify_nash([1 / 3] * 3, RPS).verdict is Verdict.NASH
        rep = certify_ess([1 / 3] * 3, RPS)
        assert rep.verdict is Verdict.NASH
        invaders = [w for w in rep.witnesses if w.condition == "invades"]
        assert {w.strategy for w in invaders} == {0, 1, 2}
        assert all(abs(w.margin) < 1e-12 for w in invaders)

    def test_hawk_dove_mixed_ess(self):
        rep = certify_ess([0.5, 0.5], HAWK_DOVE)
        assert rep.verdict is Verdict.ESS
        # both pure replies tie
        assert sorted(w.strategy for w in rep.witnesses if w.condition == "ties") == [0, 1]

    def test_hawk_dove_second_condition_margins(self):
        # E(p,H) - E(H,H) = -0.5 - (-1) and E(p,D) - E(D,D) = 1.5 - 1
        p = [0.5, 0.5]
        assert expected_payoff(p, [1, 0], HAWK_DOVE) - HAWK_DOVE[0][0] == pytest.approx(0.5)
        assert expected_payoff(p, [0, 1], HAWK_DOVE) - HAWK_DOVE[1][1] == pytest.approx(0.5)

    def test_mixed_never_strict(self):
        assert certify_nash([0.5, 0.5], HAWK_DOVE).verdict is Verdict.NASH

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            certify_nash([0, 1], PD, tol=-1.0)

    def test_ess_implies_nash(self, rng):
        hits = 0
        for _ in range(300):
            n = int(rng.integers(2, 5))
            A = random_game(rng, n)
            for i in range(n):
                p = pure(i, n)
                if certify_ess(p, A).verdict is Verdict.ESS:
                    hits += 1
                    assert certify_nash(p, A).verdict in (Verdict.NASH, Verdict.STRICT_NASH)
        assert hits > 0

    @pytest.mark.parametrize("c", [-5.0, 7.0])
    def test_column_shift_invariance(self, rng, c):
        for _ in range(40):
            n = int(rng.integers(2, 4))
            A = random_game(rng, n)
            candidates = [pure(i, n) for i in range(n)]
            candidates += [fp.strategy for fp in find_fixed_points(A).points]
            for j in range(n):
                B = A.copy()
                B[:, j] += c
                for p in candidates:
                    assert certify_nash(p, A).verdict == certify_nash(p, B).verdict
                    assert certify_ess(p, A).verdict == certify_ess(p, B).verdict


def test_pure_screening_exact_for_two_strategies(rng):
    """For n = 2 pure-mutant screening agrees with a dense mixed-mutant scan."""
    grid = np.linspace(0, 1, 401)
    for _ in range(30):
        A = random_game(rng, 2)
        for fp in find_fixed_points(A).points:
            p = fp.strategy
            epp = p @ A @ p
            ok = True
            for a in grid:
                r = np.array([a, 1 - a])
                if np.allclose(r, p):
                    continue
                erp = r @ A @ p
                if erp > epp + 1e-9 or (abs(erp - epp) <= 1e-9 and not p @ A @ r > r @ A @ r + 1e-9):
                    ok = False
                    break
            assert (certify_ess(p, A).verdict is Verdict.ESS) == ok
