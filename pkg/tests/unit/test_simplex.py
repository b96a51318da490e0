import numpy as np
import pytest
from scipy.optimize import linprog

from trust_aware_sfc.infrastructure.simplex import Basis, BoundedDualSimplex, DenseSimplex, LPStatus


def test_inequality_lp():
    # min -x - y  s.t.  x + y <= 4, x <= 3
    result = DenseSimplex().solve(
        np.array([-1.0, -1.0]), a_ub=np.array([[1.0, 1.0], [1.0, 0.0]]), b_ub=np.array([4.0, 3.0])
    )
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(-4.0)


def test_equality_lp():
    # min x + 2y  s.t.  x + y = 3
    result = DenseSimplex().solve(np.array([1.0, 2.0]), a_eq=np.array([[1.0, 1.0]]), b_eq=np.array([3.0]))
    assert result.is_optimal
    assert result.x == pytest.approx([3.0, 0.0])


def test_infeasible_lp():
    # x + y <= 1 and x + y >= 2
    result = DenseSimplex().solve(
        np.array([1.0, 1.0]), a_ub=np.array([[1.0, 1.0], [-1.0, -1.0]]), b_ub=np.array([1.0, -2.0])
    )
    assert result.status is LPStatus.INFEASIBLE


def test_unbounded_lp():
    result = DenseSimplex().solve(np.array([-1.0, 0.0]), a_ub=np.array([[1.0, -1.0]]), b_ub=np.array([1.0]))
    assert result.status is LPStatus.UNBOUNDED


def test_bounds_and_fixed_variables():
    # min -x - y with 1 <= x <= 2 and y fixed at 0.5
    result = DenseSimplex().solve(
        np.array([-1.0, -1.0]), lb=np.array([1.0, 0.5]), ub=np.array([2.0, 0.5])
    )
    assert result.is_optimal
    assert result.x == pytest.approx([2.0, 0.5])
    assert result.objective == pytest.approx(-2.5)


def test_empty_bounds_are_infeasible():
    result = DenseSimplex().solve(np.array([1.0]), lb=np.array([2.0]), ub=np.array([1.0]))
    assert result.status is LPStatus.INFEASIBLE


def test_cycling_example_terminates():
    # Classic degenerate instance on which Dantzig pricing cycles without an anti-cycling rule
    c = np.array([-0.75, 20.0, -0.5, 6.0])
    a_ub = np.array([
        [0.25, -8.0, -1.0, 9.0],
        [0.5, -12.0, -0.5, 3.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    b_ub = np.array([0.0, 0.0, 1.0])
    result = DenseSimplex().solve(c, a_ub=a_ub, b_ub=b_ub)
    assert result.is_optimal
    assert result.objective == pytest.approx(-1.25)


def test_redundant_equalities():
    # The second equality repeats the first
    result = DenseSimplex().solve(
        np.array([1.0, 1.0, 0.0]),
        a_eq=np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 2.0]]),
        b_eq=np.array([2.0, 4.0]),
    )
    assert result.is_optimal
    assert result.objective == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(25))
def test_matches_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    n, m_ub, m_eq = 6, 4, 2
    c = rng.normal(size=n)
    a_ub = rng.uniform(0.0, 1.0, size=(m_ub, n))
    b_ub = rng.uniform(1.0, 5.0, size=m_ub)
    # Equalities satisfied by a known interior point keep the LP feasible
    x0 = rng.uniform(0.1, 0.5, size=n) / n
    a_eq = rng.normal(size=(m_eq, n))
    b_eq = a_eq @ x0
    ub = np.full(n, 2.0)

    ours = DenseSimplex().solve(c, a_ub, b_ub, a_eq, b_eq, np.zeros(n), ub)
    reference = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=[(0, 2.0)] * n, method="highs")
    assert reference.status == 0
    assert ours.is_optimal
    assert ours.objective == pytest.approx(reference.fun, abs=1e-6)


def random_lp(seed: int):
    """Bounded LP with a known feasible point, as arrays for BoundedDualSimplex."""
    rng = np.random.default_rng(seed)
    n, m_ub, m_eq = 8, 5, 2
    c = rng.normal(size=n)
    a_ub = rng.uniform(0.0, 1.0, size=(m_ub, n))
    b_ub = rng.uniform(1.0, 5.0, size=m_ub)
    x0 = rng.uniform(0.1, 0.5, size=n) / n
    a_eq = rng.normal(size=(m_eq, n))
    b_eq = a_eq @ x0
    return c, a_ub, b_ub, a_eq, b_eq, x0


def highs(c, a_ub, b_ub, a_eq, b_eq, lb, ub):
    return linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=list(zip(lb, ub)), method="highs")


@pytest.mark.parametrize("seed", range(25))
def test_dual_simplex_matches_highs_cold_and_warm(seed):
    c, a_ub, b_ub, a_eq, b_eq, x0 = random_lp(seed)
    n = c.size
    engine = BoundedDualSimplex(c, a_ub, b_ub, a_eq, b_eq)
    lb, ub = np.zeros(n), np.full(n, 2.0)

    cold, basis = engine.solve(lb, ub)
    assert cold.is_optimal
    assert cold.objective == pytest.approx(highs(c, a_ub, b_ub, a_eq, b_eq, lb, ub).fun, abs=1e-6)
    assert isinstance(basis, Basis)

    # Branch-style change: fix one variable at the value of the known feasible point
    j = seed % n
    lb[j] = ub[j] = x0[j]
    warm, _ = engine.solve(lb, ub, basis)
    reference = highs(c, a_ub, b_ub, a_eq, b_eq, lb, ub)
    assert reference.status == 0
    assert warm.is_optimal
    assert warm.objective == pytest.approx(reference.fun, abs=1e-6)
    assert warm.objective >= cold.objective - 1e-7


def test_dual_simplex_detects_infeasible_bounds_after_warm_start():
    # x + y = 3, feasible until both are capped at 1
    engine = BoundedDualSimplex(
        np.array([1.0, 2.0]), np.zeros((0, 2)), np.zeros(0), np.array([[1.0, 1.0]]), np.array([3.0])
    )
    first, basis = engine.solve(np.zeros(2), np.full(2, np.inf))
    assert first.is_optimal
    assert first.x == pytest.approx([3.0, 0.0])
    second, next_basis = engine.solve(np.zeros(2), np.ones(2), basis)
    assert second.status is LPStatus.INFEASIBLE
    assert next_basis is None


def test_dual_simplex_ignores_an_unusable_basis():
    # min x + y  s.t.  x + y >= 2, x <= 5
    engine = BoundedDualSimplex(
        np.array([1.0, 1.0]), np.array([[-1.0, -1.0], [1.0, 0.0]]), np.array([-2.0, 5.0]), np.zeros((0, 2)), np.zeros(0)
    )
    # One column too many, then a singular basis
    for basis in (Basis((0, 1, 2)), Basis((0, 0))):
        result, _ = engine.solve(np.zeros(2), np.full(2, np.inf), basis)
        assert result.is_optimal
        assert result.objective == pytest.approx(2.0)


def test_dual_simplex_needs_a_dual_feasible_start():
    # Negative cost on an unbounded column: no bound flip can make the slack basis dual feasible
    engine = BoundedDualSimplex(
        np.array([-1.0]), np.array([[1.0]]), np.array([4.0]), np.zeros((0, 1)), np.zeros(0)
    )
    result, basis = engine.solve(np.zeros(1), np.full(1, np.inf))
    assert result.status is LPStatus.NUMERICAL_ERROR
    assert basis is None
    # The same LP with a finite upper bound starts with x at its bound
    result, _ = engine.solve(np.zeros(1), np.array([3.0]))
    assert result.is_optimal
    assert result.x == pytest.approx([3.0])
