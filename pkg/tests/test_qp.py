from itertools import combinations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from phmin.errors import DimensionMismatch
from phmin.qp import QpSpec, QpStatus, feasible_point, solve_qp

EX51_BETA = np.array([1.161, -0.092, -0.069])


def brute_force(spec: QpSpec) -> float:
    """Best objective over the KKT points of every active set."""
    n = spec.n_vars
    best = np.inf
    rows = range(spec.G.shape[0])
    for size in range(0, n + 1):
        for active in combinations(rows, size):
            Aw = np.vstack([spec.E, spec.G[list(active)]])
            bw = np.concatenate([spec.e, spec.g[list(active)]])
            m = Aw.shape[0]
            if m and np.linalg.matrix_rank(Aw) < m:
                continue
            K = np.block([[spec.H, Aw.T], [Aw, np.zeros((m, m))]])
            if np.linalg.matrix_rank(K) < K.shape[0]:
                continue
            x = np.linalg.solve(K, np.concatenate([-spec.c, bw]))[:n]
            if np.all(spec.G @ x <= spec.g + 1e-9):
                best = min(best, spec.objective(x))
    return best


def random_box_qp(seed: int) -> QpSpec:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    B = rng.normal(size=(n, n))
    return QpSpec(
        H=B @ B.T + 0.1 * np.eye(n),
        c=rng.normal(scale=3.0, size=n),
        E=np.ones((1, n)),
        e=np.array([0.5]),
        G=np.vstack([np.eye(n), -np.eye(n)]),
        g=np.ones(2 * n),
    )


class TestSolveQp:
    @pytest.mark.parametrize("seed", range(100))
    def test_matches_active_set_enumeration(self, seed):
        spec = random_box_qp(seed)
        solution = solve_qp(spec)
        assert solution.status == QpStatus.OPTIMAL
        assert solution.objective == pytest.approx(brute_force(spec), abs=1e-6)
        assert np.all(solution.ineq_multipliers >= -1e-12)
        assert solution.kkt.worst() <= 1e-7

    def test_unconstrained_minimum(self):
        spec = QpSpec(H=np.diag([2.0, 4.0]), c=np.array([-2.0, -4.0]))
        solution = solve_qp(spec)
        assert_allclose(solution.x, [1.0, 1.0], atol=1e-12)

    def test_singular_hessian_with_equality(self):
        # minimize (x1 - x2)^2 subject to x1 + x2 = 1, x >= 0
        H = 2.0 * np.array([[1.0, -1.0], [-1.0, 1.0]])
        spec = QpSpec(H=H, c=np.zeros(2), E=[[1.0, 1.0]], e=[1.0], G=-np.eye(2), g=np.zeros(2))
        solution = solve_qp(spec)
        assert solution.status == QpStatus.OPTIMAL
        assert_allclose(solution.x, [0.5, 0.5], atol=1e-8)

    def test_flat_direction_is_minimized(self):
        # curvature 2e-14 along x2 next to a large gradient along x1
        spec = QpSpec(H=np.diag([2.0, 2e-14]), c=np.array([-2000.0, -2e-14]))
        solution = solve_qp(spec)
        assert solution.status == QpStatus.OPTIMAL
        assert_allclose(solution.x, [1000.0, 1.0], rtol=1e-9)

    def test_flat_direction_under_equality(self):
        # minimize 1e-12 (x1 - x2)^2 + (x3 - 1)^2 subject to x1 + x2 + x3 = 2, x >= 0
        H = 2.0 * np.array([[1e-12, -1e-12, 0.0], [-1e-12, 1e-12, 0.0], [0.0, 0.0, 1.0]])
        spec = QpSpec(
            H=H,
            c=np.array([0.0, 0.0, -2.0]),
            E=[[1.0, 1.0, 1.0]],
            e=[2.0],
            G=-np.eye(3),
            g=np.zeros(3),
        )
        solution = solve_qp(spec, x0=np.array([1.0, 0.0, 1.0]))
        assert solution.status == QpStatus.OPTIMAL
        assert_allclose(solution.x, [0.5, 0.5, 1.0], atol=1e-9)

    def test_warm_start_is_used_when_feasible(self):
        spec = random_box_qp(3)
        cold = solve_qp(spec)
        warm = solve_qp(spec, x0=cold.x, active_hint=cold.active_set)
        assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
        assert warm.iterations <= cold.iterations

    def test_infeasible(self):
        spec = QpSpec(
            H=np.eye(2),
            c=np.zeros(2),
            E=[[1.0, 1.0]],
            e=[3.0],
            G=np.eye(2),
            g=np.ones(2),
        )
        solution = solve_qp(spec)
        assert solution.status == QpStatus.INFEASIBLE
        assert solution.certificate is not None

    def test_unbounded_direction(self):
        spec = QpSpec(H=np.zeros((1, 1)), c=np.array([-1.0]))
        assert solve_qp(spec).status == QpStatus.UNBOUNDED

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            QpSpec(H=np.eye(2), c=np.zeros(3))

    def test_deterministic(self):
        spec = random_box_qp(17)
        first, second = solve_qp(spec), solve_qp(spec)
        assert np.array_equal(first.x, second.x)
        assert first.active_set == second.active_set


class TestFeasiblePoint:
    def test_p_step_constraints(self):
        n = 3
        E = np.kron(np.eye(n), np.ones((1, n)))
        G = -np.kron(EX51_BETA[None, :], np.eye(n))
        result = feasible_point(E, np.ones(n), G, np.zeros(n))
        assert result.feasible
        P = result.x.reshape(n, n)
        assert_allclose(P.sum(axis=1), np.ones(n), atol=1e-9)
        assert np.all(EX51_BETA @ P >= -1e-9)

    def test_infeasible_has_certificate(self):
        result = feasible_point([[1.0]], [1.0], [[1.0]], [0.0])
        assert not result.feasible
        y, z = result.certificate[:1], result.certificate[1:]
        assert np.all(z >= 0.0)
        assert y @ [1.0] + z @ [0.0] < 0.0

    def test_no_constraints(self):
        result = feasible_point(None, None, None, None, n_vars=2)
        assert result.feasible
        assert result.x.shape == (2,)
