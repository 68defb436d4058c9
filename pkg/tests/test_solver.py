import csv

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from _gen import random_sheaf, spd
from homprog.dynamics import DiffusionParams, apply_laplacian, harmonic_projection_oracle
from homprog.potentials import EdgePotential, PotentialAssignment
from homprog.qp import projected_gradient_residual
from homprog.sheaf import Graph, assemble_coboundary_matrix, constant_sheaf
from homprog.solver import (
    AdmmParams,
    BoxQuadraticObjective,
    HomologicalProgram,
    ProxFailure,
    QuadraticObjective,
    SmoothObjective,
    ZeroObjective,
    admm_solve,
    check_convexity,
    write_report_csv,
    x_update,
    y_update,
    z_update_projection,
    z_update_relaxed,
)
from test_acceptance import kkt_optimum, random_convex_program


def path_program(n=3, pot=EdgePotential.quadratic, objs=None, k=1):
    sh = constant_sheaf(Graph.path(n), k)
    pa = PotentialAssignment.uniform(sh, pot)
    return HomologicalProgram(sh, pa, tuple(objs or [ZeroObjective(k)] * n))


# --- program construction and diagnostics -----------------------------------------


def test_program_validates_objectives():
    sh = constant_sheaf(Graph.path(2), 2)
    pa = PotentialAssignment.uniform(sh, EdgePotential.quadratic)
    with pytest.raises(ValueError, match="one objective per node"):
        HomologicalProgram(sh, pa, (ZeroObjective(2),))
    with pytest.raises(ValueError, match="stalk dim"):
        HomologicalProgram(sh, pa, (ZeroObjective(2), ZeroObjective(3)))


def test_convexity_all_quadratic():
    rep = check_convexity(path_program(objs=[QuadraticObjective.tracking([1.0])] * 3))
    assert rep.convex_program and rep.recommended_mode == "projection"


def test_convexity_dissensus_names_edge():
    sh = constant_sheaf(Graph.path(3), 1)
    pa = PotentialAssignment(sh, (EdgePotential.quadratic(1), EdgePotential.dissensus(1)))
    rep = check_convexity(HomologicalProgram(sh, pa, (ZeroObjective(1),) * 3))
    assert not rep.convex_program and rep.nonconvex_edges == [(1, 2)]
    assert any("(1, 2)" in m for m in rep.messages)


def test_convexity_fixed_distance_recommends_relaxed():
    rep = check_convexity(path_program(pot=lambda d: EdgePotential.fixed_distance_sq(d, 1.0), k=2))
    assert not rep.convex_program and rep.recommended_mode == "relaxed"


def test_convexity_nonconvex_node():
    rep = check_convexity(path_program(objs=[QuadraticObjective([[-1.0]])] + [ZeroObjective(1)] * 2))
    assert rep.nonconvex_nodes == [0]


# --- x, z and y updates --------------------------------------------------------------


def test_x_update_zero_objective_is_identity():
    prog = path_program()
    z = prog.sheaf.cochain0([[1.0], [2.0], [3.0]])
    y = prog.sheaf.cochain0([[0.5], [0.0], [-1.0]])
    assert np.allclose(x_update(prog, z, y, 2.0).data, (z - y).data)


@given(st.floats(0.1, 50), st.floats(-5, 5), st.floats(-5, 5))
def test_x_update_closed_form_tracking(rho, a, v):
    prog = path_program(n=2, objs=[QuadraticObjective.tracking([a])] * 2)
    z = prog.sheaf.cochain0([[v], [v]])
    x = x_update(prog, z, prog.sheaf.zeros0(), rho)
    assert np.allclose(x.data, (a + rho * v) / (1 + rho))


def test_x_update_box_constrained_is_stationary():
    rng = np.random.default_rng(0)
    P, q = spd(rng, 3), rng.standard_normal(3) * 5
    f = BoxQuadraticObjective(P, q, -0.5, 0.5)
    v = rng.standard_normal(3)
    x = f.prox(v, 1.5)
    H, g = P + 1.5 * np.eye(3), q - 1.5 * v
    assert projected_gradient_residual(H, g, x, -0.5, 0.5) <= 1e-6
    assert np.isfinite(f.evaluate(x)) and f.evaluate(x + 10) == np.inf


def test_x_update_is_block_local():
    rng = np.random.default_rng(1)
    sh = constant_sheaf(Graph.path(3), 2)
    prog = HomologicalProgram(sh, PotentialAssignment.uniform(sh, EdgePotential.quadratic),
                              tuple(QuadraticObjective(spd(rng, 2), rng.standard_normal(2)) for _ in range(3)))
    z, y = sh.random_cochain0(rng), sh.random_cochain0(rng)
    base = x_update(prog, z, y, 1.0)
    z2 = sh.cochain0([z.block(0) + 3.0, z.block(1), z.block(2) - 1.0])
    assert np.array_equal(x_update(prog, z2, y, 1.0).block(1), base.block(1))


def test_prox_failure_names_node():
    class Broken(ZeroObjective):
        def prox(self, v, rho):
            raise RuntimeError("boom")

    prog = path_program(objs=[ZeroObjective(1), Broken(1), ZeroObjective(1)])
    with pytest.raises(ProxFailure) as exc:
        x_update(prog, prog.sheaf.zeros0(), prog.sheaf.zeros0(), 1.0)
    assert exc.value.node == 1 and "boom" in str(exc.value)


def test_smooth_objective_prox():
    f = SmoothObjective(2, lambda x: float(np.sum(x**4)), lambda x: 4 * x**3)
    v = np.array([1.0, -2.0])
    x = f.prox(v, 1.0)
    assert np.max(np.abs(4 * x**3 + (x - v))) <= 1e-8


def test_z_projection_fixes_feasible_points_and_averages():
    prog = path_program()
    v = prog.sheaf.cochain0([[4.0]] * 3)
    z, _ = z_update_projection(prog, v, DiffusionParams(tol=1e-10))
    assert np.allclose(z.data, 4.0)
    z, _ = z_update_projection(prog, prog.sheaf.cochain0([[0.0], [3.0], [6.0]]), DiffusionParams(tol=1e-10))
    assert np.allclose(z.data, 3.0, atol=1e-6)


def test_z_projection_matches_oracle():
    rng = np.random.default_rng(8)
    prog = random_convex_program(rng)
    v = prog.sheaf.random_cochain0(rng)
    z, _ = z_update_projection(prog, v, DiffusionParams(tol=1e-11, method="cg"))
    assert (z - harmonic_projection_oracle(prog.ctx, v)).norm(np.inf) <= 1e-5


def test_z_relaxed_zero_potentials_returns_v():
    prog = path_program(pot=EdgePotential.zero)
    v = prog.sheaf.cochain0([[1.0], [-2.0], [5.0]])
    z, info = z_update_relaxed(prog, v, 1.0)
    assert np.allclose(z.data, v.data, atol=1e-10) and info.converged


@given(st.integers(0, 2**32 - 1), st.floats(0.2, 20))
def test_z_relaxed_quadratic_solves_linear_system(seed, rho):
    rng = np.random.default_rng(seed)
    sh = random_sheaf(rng, n_max=5, dim_max=3)
    prog = HomologicalProgram(sh, PotentialAssignment.uniform(sh, EdgePotential.quadratic),
                              tuple(ZeroObjective(d) for d in sh.node_dims))
    v = sh.random_cochain0(rng)
    z, info = z_update_relaxed(prog, v, rho, tol=1e-10)
    D = assemble_coboundary_matrix(sh)
    ref = np.linalg.solve(D.T @ D + rho * np.eye(sh.dim0), rho * v.data)
    assert info.converged
    # g is rho-strongly convex, so |z - z*| <= |grad g|_2 / rho
    assert np.linalg.norm(z.data - ref) <= np.sqrt(sh.dim0) * 1e-10 / rho * (1 + 1e-6)


def test_z_relaxed_fixed_distance_is_stationary():
    prog = path_program(pot=lambda d: EdgePotential.fixed_distance_sq(d, 2.0), k=2)
    rng = np.random.default_rng(2)
    v = prog.sheaf.random_cochain0(rng)
    z, info = z_update_relaxed(prog, v, 3.0, tol=1e-8, gamma=0.7)
    grad = 0.7 * apply_laplacian(prog.ctx, z).data + 3.0 * (z.data - v.data)
    assert info.converged and np.max(np.abs(grad)) <= 1e-8


def test_y_update():
    sh = constant_sheaf(Graph.path(2), 1)
    x, z = sh.cochain0([[1.0], [2.0]]), sh.cochain0([[0.0], [2.0]])
    assert np.array_equal(y_update(sh.zeros0(), z, z).data, [0.0, 0.0])
    assert y_update(sh.zeros0(), x, z).data.tolist() == [1.0, 0.0]
    y = sh.cochain0([[0.5], [0.5]])
    for _ in range(4):
        y = y_update(y, x, z)
    assert y.data.tolist() == [4.5, 0.5]


# --- ADMM -------------------------------------------------------------------------------


def test_admm_params_validation():
    for bad in (dict(rho=0), dict(K=0), dict(mode="fast"), dict(eps1=-1), dict(diffusion_method="rk4")):
        with pytest.raises(ValueError):
            AdmmParams(**bad)


def test_admm_two_node_consensus_and_dual():
    sh = constant_sheaf(Graph.path(2), 1)
    prog = HomologicalProgram(sh, PotentialAssignment.uniform(sh, EdgePotential.quadratic),
                              (QuadraticObjective.tracking([0.0]), QuadraticObjective.tracking([4.0])))
    res = admm_solve(prog, AdmmParams(eps1=1e-8))
    assert np.allclose(res.z.data, 2.0, atol=1e-6)
    assert res.report.status == "converged" and res.report.mode == "projection"
    # optimality of x = z: grad f(z) + rho y = 0
    assert np.allclose(res.y.data, [-2.0, 2.0], atol=1e-5)


def test_admm_feasibility_only_program():
    rng = np.random.default_rng(3)
    sh = random_sheaf(rng, n_max=5, dim_max=2)
    prog = HomologicalProgram(sh, PotentialAssignment.uniform(sh, EdgePotential.quadratic),
                              tuple(ZeroObjective(d) for d in sh.node_dims))
    res = admm_solve(prog, AdmmParams(K=50))
    assert res.report.status == "converged"
    assert apply_laplacian(prog.ctx, res.z).norm(np.inf) <= 1e-5


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_admm_against_kkt(seed):
    prog = random_convex_program(np.random.default_rng(seed))
    p_star, _ = kkt_optimum(prog)
    # |L z| <= eps2 only pins z to within eps2 / lambda_min of the constraint set
    D = assemble_coboundary_matrix(prog.sheaf)
    ev = np.linalg.eigvalsh(D.T @ D)
    lam = ev[ev > 1e-10 * max(ev.max(), 1.0)].min(initial=1.0)
    assume(lam >= 1e-8)
    res = admm_solve(prog, AdmmParams(K=500, diffusion_method="cg", eps2=min(1e-6, 1e-4 * lam)))
    assert res.report.status == "converged"
    assert abs(prog.objective(res.z) - p_star) <= 1e-3
    # every projection-mode iterate lies on the constraint set
    assert apply_laplacian(prog.ctx, res.z).norm(np.inf) <= 10 * 1e-6


def test_scaled_dual_matches_kkt_multiplier():
    prog = random_convex_program(np.random.default_rng(11))
    res = admm_solve(prog, AdmmParams(K=2000, eps1=1e-9))
    from scipy.linalg import block_diag

    P = block_diag(*[f.P for f in prog.objectives])
    q = np.concatenate([f.q for f in prog.objectives])
    D = assemble_coboundary_matrix(prog.sheaf)
    b = np.concatenate([p.minimizer for p in prog.potentials])
    n, m = P.shape[0], D.shape[0]
    sol = np.linalg.lstsq(np.block([[P, D.T], [D, np.zeros((m, m))]]), np.concatenate([-q, b]), rcond=None)[0]
    # KKT: P x + q + D^T nu = 0; ADMM: P x + q + rho y = 0, so rho y = D^T nu
    assert np.allclose(1.0 * res.y.data, D.T @ sol[n:], atol=1e-2)


def test_admm_max_iters_is_a_status():
    prog = random_convex_program(np.random.default_rng(4))
    res = admm_solve(prog, AdmmParams(K=2, eps1=1e-12))
    assert res.report.status == "max_iters" and res.report.iterations == 2


def test_admm_relaxed_mode_on_flocking_pair():
    sh = constant_sheaf(Graph.path(2), 2)
    pa = PotentialAssignment.uniform(sh, lambda d: EdgePotential.fixed_distance_sq(d, 1.0))
    prog = HomologicalProgram(sh, pa, (QuadraticObjective.tracking([0.0, 0.0]), QuadraticObjective.tracking([0.1, 0.0])))
    res = admm_solve(prog, AdmmParams(K=500, rho=20.0))
    assert res.report.mode == "relaxed" and res.report.status == "converged"
    d = np.linalg.norm(res.z.block(0) - res.z.block(1))
    assert 0.9 < d < 1.0  # pulled toward the anchors but held near the target distance


def test_admm_warm_start_layout_checked():
    prog = path_program()
    with pytest.raises(Exception):
        admm_solve(prog, AdmmParams(), z0=constant_sheaf(Graph.path(2), 1).zeros0())


def test_report_csv(tmp_path):
    prog = random_convex_program(np.random.default_rng(5))
    res = admm_solve(prog, AdmmParams(K=20))
    path = tmp_path / "r.csv"
    write_report_csv(res.report, path, prefix=[("step", 3)])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["step", "iter", "primal_res", "dual_res", "objective"]
    assert len(rows) == res.report.iterations + 1 and rows[1][0] == "3"
