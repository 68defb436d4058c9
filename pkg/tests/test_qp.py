import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _gen import spd
from homprog.qp import _projected_gradient, projected_gradient_residual, solve_box_qp


def cvx_box_qp(H, g, lo, hi):
    u = cp.Variable(g.size)
    cp.Problem(cp.Minimize(0.5 * cp.quad_form(u, cp.psd_wrap(H)) + g @ u), [u >= lo, u <= hi]).solve()
    return u.value


def test_unconstrained_interior_solution():
    H = np.diag([2.0, 4.0])
    g = np.array([-2.0, 4.0])
    res = solve_box_qp(H, g, -10, 10)
    assert res.converged and np.allclose(res.u, [1.0, -1.0])


def test_clamped_optimum():
    res = solve_box_qp(np.eye(1), np.array([-5.0]), -2, 2)
    assert res.u.tolist() == [2.0]


def test_infeasible_box():
    with pytest.raises(ValueError, match="infeasible"):
        solve_box_qp(np.eye(2), np.zeros(2), [0, 1], [1, 0])


def test_empty_problem():
    res = solve_box_qp(np.zeros((0, 0)), np.zeros(0), -1, 1)
    assert res.converged and res.u.size == 0


@given(st.integers(0, 2**32 - 1))
def test_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 12))
    H = spd(rng, n, floor=0.05)
    g = rng.standard_normal(n) * 3
    lo = -rng.uniform(0.1, 2, n)
    hi = rng.uniform(0.1, 2, n)
    res = solve_box_qp(H, g, lo, hi)
    assert res.converged
    assert projected_gradient_residual(H, g, res.u, lo, hi) <= 1e-9
    assert np.all(res.u >= lo) and np.all(res.u <= hi)
    ref = cvx_box_qp(H, g, lo, hi)
    f = lambda u: 0.5 * u @ H @ u + g @ u  # noqa: E731
    assert f(res.u) <= f(np.clip(ref, lo, hi)) + 1e-7


def test_projected_gradient_fallback_agrees():
    rng = np.random.default_rng(1)
    H = spd(rng, 6)
    g = rng.standard_normal(6) * 4
    a = solve_box_qp(H, g, -1, 1)
    b = _projected_gradient(H, g, np.full(6, -1.0), np.full(6, 1.0), np.zeros(6), 1e-12)
    assert b.converged and np.allclose(a.u, b.u, atol=1e-9)
