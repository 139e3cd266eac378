import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from phmin.am import (
    AmOutcome,
    default_init,
    extrapolate,
    extract_representation,
    hessian_in_P,
    in_box,
    objective,
    run_am,
    run_am_multistart,
    solve_op_a,
    solve_op_p,
)
from phmin.errors import InfeasibleBeta
from phmin.jordan import ProblemData, build_jordan, build_problem
from phmin.poly import ComplexPair, PoleMultiset, RealPole
from shared.models import AmConfig, InitKind

EX51_POLES = PoleMultiset((RealPole(-1.0, 1),), (ComplexPair(-2.8, 0.4, 1),))


def random_jordan(rng: np.random.Generator, max_order: int = 6):
    """Random real Jordan form of order <= max_order with real and complex blocks."""
    real, pairs, n = [], [], 0
    while n == 0:
        for value in rng.uniform(-5.0, -0.1, size=int(rng.integers(0, 3))):
            mult = int(rng.integers(1, 3))
            if n + mult <= max_order:
                real.append(RealPole(float(value), mult))
                n += mult
        for _ in range(int(rng.integers(0, 2))):
            mult = int(rng.integers(1, 3))
            if n + 2 * mult <= max_order:
                pairs.append(ComplexPair(rng.uniform(-4.0, -0.1), rng.uniform(0.1, 2.0), mult))
                n += 2 * mult
    return build_jordan(PoleMultiset(tuple(real), tuple(pairs)))


def assert_monotone(f_trace):
    for before, after in zip(f_trace, f_trace[1:]):
        assert after <= before + 1e-12


class TestObjective:
    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_blocked_quadratic_form_equals_frobenius(self, seed):
        rng = np.random.default_rng(seed)
        jordan = random_jordan(rng)
        n = jordan.n
        A = rng.normal(size=(n, n))
        P = rng.normal(size=(n, n))
        x = P.ravel()
        direct = objective(P, A, jordan)
        blocked = 0.5 * x @ hessian_in_P(A, jordan) @ x
        assert blocked == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_hessian_is_singular_at_jordan(self):
        jordan = build_jordan(EX51_POLES)
        H = hessian_in_P(jordan.dense, jordan)
        eigenvalues = np.linalg.eigvalsh(H)
        assert eigenvalues.min() == pytest.approx(0.0, abs=1e-10)
        assert eigenvalues.max() > 0.0

    def test_scalar_hessian(self):
        # J = [lam], A = [a]: F(p) = (a - lam)^2 p^2
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        A = np.array([[-0.5]])
        H = hessian_in_P(A, jordan)
        assert_allclose(H, [[4.5]])
        assert 0.5 * H[0, 0] == pytest.approx((-0.5 + 2.0) ** 2)
        assert 0.5 * H[0, 0] * 0.8**2 == pytest.approx(objective(np.array([[0.8]]), A, jordan))

    def test_zero_at_similarity(self):
        jordan = build_jordan(EX51_POLES)
        assert objective(np.eye(3), jordan.dense, jordan) == 0.0


class TestSubproblems:
    def test_p_step_infeasible_beta(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        with pytest.raises(InfeasibleBeta):
            solve_op_a(np.array([[-2.0]]), np.array([-1.0]), jordan, 1e-10)

    def test_p_step_feasibility(self):
        jordan = build_jordan(EX51_POLES)
        beta = np.array([1.161, -0.092, -0.069])
        A = default_init(jordan, InitKind.JORDAN_PLUS_ONES)
        P = solve_op_a(A, beta, jordan, 1e-10).matrix
        assert_allclose(P.sum(axis=1), np.ones(3), atol=1e-9)
        assert np.all(beta @ P >= -1e-9)

    def test_a_step_scalar(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        A = solve_op_p(np.array([[1.0]]), 2.0, jordan, 1e-10).matrix
        assert_allclose(A, [[-2.0]], atol=1e-9)

    def test_a_step_projects_jordan_into_box(self):
        jordan = build_jordan(EX51_POLES)
        step = solve_op_p(np.eye(3), 6.6, jordan, 1e-10)
        assert in_box(step.matrix, 6.6)
        assert objective(np.eye(3), step.matrix, jordan) > 0.0
        assert step.matrix[1, 2] == pytest.approx(0.0, abs=1e-9)

    def test_a_step_never_increases_objective(self):
        jordan = build_jordan(EX51_POLES)
        rng = np.random.default_rng(4)
        P = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
        A0 = default_init(jordan, InitKind.MINUS_XI_I, xi=6.6)
        A1 = solve_op_p(P, 6.6, jordan, 1e-10, A0=A0).matrix
        assert objective(P, A1, jordan) <= objective(P, A0, jordan) + 1e-12


class TestExtrapolate:
    def test_cut_back_to_box(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        P = np.array([[1.0]])
        moved = extrapolate(
            P, np.array([[-1.0]]), P, np.array([[-0.5]]), np.array([1.0]), 2.0, jordan, 16.0
        )
        assert moved is not None
        _, A, F = moved
        assert_allclose(A, [[-2.0]])
        assert F == pytest.approx(0.0, abs=1e-15)

    def test_step_is_kept_when_feasible(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        P = np.array([[1.0]])
        _, A, _ = extrapolate(
            P, np.array([[-1.0]]), P, np.array([[-0.75]]), np.array([1.0]), 2.0, jordan, 1.0
        )
        assert_allclose(A, [[-1.25]])

    def test_no_room_at_the_boundary(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        P = np.array([[1.0]])
        moved = extrapolate(
            P, np.array([[-2.0]]), P, np.array([[-1.0]]), np.array([1.0]), 2.0, jordan, 1.0
        )
        assert moved is None

    def test_initial_distribution_stays_nonnegative(self):
        jordan = build_jordan(PoleMultiset((RealPole(-1.0, 1), RealPole(-2.0, 1))))
        beta = np.array([0.5, 0.5])
        P_prev = np.array([[1.0, 0.0], [0.5, 0.5]])
        A = jordan.dense
        P, _, _ = extrapolate(np.eye(2), A, P_prev, A, beta, 3.0, jordan, 16.0)
        assert_allclose(P, [[1.0, 0.0], [-1.0, 2.0]])
        assert_allclose(P.sum(axis=1), [1.0, 1.0])
        assert_allclose(beta @ P, [0.0, 1.0], atol=1e-15)


class TestDefaultInit:
    def test_jordan_plus_ones(self):
        jordan = build_jordan(EX51_POLES)
        A0 = default_init(jordan, InitKind.JORDAN_PLUS_ONES)
        assert_allclose(A0, [[-1.0, 1.0, 1.0], [1.0, -2.8, 0.6], [1.0, 1.4, -2.8]])

    def test_jordan(self):
        jordan = build_jordan(EX51_POLES)
        assert_allclose(default_init(jordan, InitKind.JORDAN), jordan.dense)

    def test_minus_xi(self):
        poles = PoleMultiset((RealPole(-1.0, 1), RealPole(-1.2, 2), RealPole(-1.3, 3)))
        jordan = build_jordan(poles)
        assert_allclose(default_init(jordan, InitKind.MINUS_XI_I, xi=7.3), -7.3 * np.eye(6))

    def test_random_is_inside_box(self):
        jordan = build_jordan(EX51_POLES)
        A0 = default_init(jordan, InitKind.RANDOM, xi=6.6, seed=5)
        assert in_box(A0, 6.6)
        assert np.max(np.abs(np.diag(A0))) == pytest.approx(3.3)

    def test_random_is_seeded(self):
        jordan = build_jordan(EX51_POLES)
        first = default_init(jordan, InitKind.RANDOM, xi=6.6, seed=5)
        second = default_init(jordan, InitKind.RANDOM, xi=6.6, seed=5)
        assert np.array_equal(first, second)

    def test_custom_matrix(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        assert_allclose(default_init(jordan, InitKind.CUSTOM, init_matrix=[[-1.5]]), [[-1.5]])


class TestRunAm:
    def test_exponential(self, exponential_lst):
        problem = build_problem(exponential_lst)
        report = run_am(problem, AmConfig())
        assert report.outcome == AmOutcome.FOUND
        assert report.iterations <= 2
        rep = extract_representation(report, problem)
        assert_allclose(rep.alpha, [1.0], atol=1e-12)
        assert_allclose(rep.A, [[-2.0]], atol=1e-9)
        assert rep.diagnostics.valid

    @pytest.mark.parametrize("extrapolate", [True, False])
    def test_monotone_descent(self, ex51_problem, extrapolate):
        config = AmConfig(init=InitKind.MINUS_XI_I, max_outer_iter=200, extrapolate=extrapolate)
        report = run_am(ex51_problem, config)
        assert report.f_trace
        assert_monotone(report.f_trace)
        assert report.f_trace[0] <= report.f_initial + 1e-12
        if not extrapolate:
            assert report.extrapolations == 0

    def test_iteration_limit(self, ex51_problem):
        report = run_am(ex51_problem, AmConfig(max_outer_iter=3, tol_term=1e-300))
        assert report.iterations == 3
        assert report.final.iter == 3

    def test_deterministic(self, ex51_problem):
        config = AmConfig(init=InitKind.RANDOM, seed=9, max_outer_iter=50)
        first, second = run_am(ex51_problem, config), run_am(ex51_problem, config)
        assert first.f_trace == second.f_trace

    def test_infeasible_beta_propagates(self):
        jordan = build_jordan(PoleMultiset((RealPole(-2.0, 1),)))
        problem = ProblemData(jordan=jordan, beta=np.array([-1.0]), xi=2.0, n=1)
        with pytest.raises(InfeasibleBeta):
            run_am(problem)

    def test_multistart_keeps_smallest_objective(self, ex51_problem):
        configs = [
            AmConfig(init=InitKind.MINUS_XI_I, max_outer_iter=20),
            AmConfig(init=InitKind.JORDAN, max_outer_iter=20),
            AmConfig(init=InitKind.RANDOM, seed=1, max_outer_iter=20),
        ]
        result = run_am_multistart(ex51_problem, configs)
        finals = [run["f_final"] for run in result.runs]
        assert len(result.runs) == 3
        assert result.best_index == int(np.argmin(finals))
        assert result.best.final.F == min(finals)

    def test_multistart_needs_configs(self, ex51_problem):
        with pytest.raises(ValueError):
            run_am_multistart(ex51_problem, [])
