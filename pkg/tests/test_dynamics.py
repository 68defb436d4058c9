import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _gen import laplacian_matrix, random_graph, random_sheaf, strongly_convex_assignment
from homprog.dynamics import (
    DiffusionParams,
    LaplacianContext,
    apply_laplacian,
    apply_laplacian_local,
    diffuse,
    harmonic_projection_oracle,
    kernel_conservation_check,
    kernel_projector,
    psi,
    write_diffusion_csv,
)
from homprog.potentials import EdgePotential, MinimizerUndefined, PotentialAssignment
from homprog.sheaf import Graph, LayoutError, coboundary, constant_sheaf, is_global_section, min_norm_preimage

seeds = st.integers(0, 2**32 - 1)


def quad_ctx(sh):
    return LaplacianContext(sh, PotentialAssignment.uniform(sh, EdgePotential.quadratic))


def path3():
    return quad_ctx(constant_sheaf(Graph.path(3), 1))


# --- Laplacian ------------------------------------------------------------------


def test_laplacian_two_node():
    ctx = quad_ctx(constant_sheaf(Graph.path(2), 1))
    x = ctx.sheaf.cochain0([[3.0], [1.0]])
    assert apply_laplacian(ctx, x).data.tolist() == [2.0, -2.0]
    assert apply_laplacian_local(ctx, 0, [3.0], {1: [1.0]}).tolist() == [2.0]


def test_laplacian_vanishes_on_sections():
    sh = constant_sheaf(Graph.complete(4), 2)
    ctx = LaplacianContext(sh, PotentialAssignment.uniform(sh, lambda d: EdgePotential.matrix_weighted(np.eye(d) * 3)))
    x = sh.cochain0([[1.0, -4.0]] * 4)
    assert not np.any(apply_laplacian(ctx, x).data)


@given(seeds, st.integers(1, 4))
def test_laplacian_kronecker_identity(seed, k):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n_max=7)
    ctx = quad_ctx(constant_sheaf(g, k))
    x = ctx.sheaf.random_cochain0(rng)
    Lk = np.kron(laplacian_matrix(g), np.eye(k))
    assert np.max(np.abs(apply_laplacian(ctx, x).data - Lk @ x.data)) <= 1e-10


@given(seeds)
def test_local_matches_global(seed):
    rng = np.random.default_rng(seed)
    sh = random_sheaf(rng, n_max=6, dim_max=3)
    kinds = [lambda d: EdgePotential.quadratic(d), lambda d: EdgePotential.fixed_distance_sq(d, 1.2),
             lambda d: EdgePotential.displacement(rng.standard_normal(d))]
    ctx = LaplacianContext(sh, PotentialAssignment(sh, tuple(kinds[int(rng.integers(3))](d) for d in sh.edge_dims)))
    x = sh.random_cochain0(rng)
    glob = apply_laplacian(ctx, x)
    for i in range(sh.graph.node_count):
        nb = {j: x.block(j) for j in sh.graph.neighbors[i]}
        loc = apply_laplacian_local(ctx, i, x.block(i), nb)
        assert np.max(np.abs(loc - glob.block(i)), initial=0.0) <= 1e-12 * (1 + np.abs(glob.data).max())


def test_local_isolated_node_and_missing_neighbor():
    sh = constant_sheaf(Graph(3, ((0, 1),)), 2)
    ctx = quad_ctx(sh)
    assert apply_laplacian_local(ctx, 2, [1.0, 2.0], {}).tolist() == [0.0, 0.0]
    with pytest.raises(KeyError):
        apply_laplacian_local(ctx, 0, [1.0, 2.0], {})
    with pytest.raises(LayoutError):
        apply_laplacian_local(ctx, 0, [1.0], {1: [0.0, 0.0]})


def test_psi_is_potential_of_coboundary():
    ctx = path3()
    x = ctx.sheaf.cochain0([[0.0], [3.0], [6.0]])
    assert psi(ctx, x) == 9.0


# --- diffusion ---------------------------------------------------------------------


def test_diffusion_fixed_point():
    ctx = path3()
    x0 = ctx.sheaf.cochain0([[2.0]] * 3)
    res = diffuse(ctx, x0)
    assert res.iterations == 0 and res.converged
    assert np.array_equal(res.x_final.data, x0.data)


@pytest.mark.parametrize("method", ["euler", "cg"])
def test_diffusion_reaches_mean(method):
    ctx = path3()
    res = diffuse(ctx, ctx.sheaf.cochain0([[0.0], [3.0], [6.0]]), DiffusionParams(tol=1e-10, method=method))
    assert res.converged and res.exact
    assert np.allclose(res.x_final.data, 3.0, atol=1e-6)
    assert is_global_section(ctx.sheaf, res.x_final, tol=1e-6)


@pytest.mark.parametrize("method", ["euler", "cg"])
@given(seed=seeds)
def test_diffusion_matches_oracle(method, seed):
    rng = np.random.default_rng(seed)
    sh = random_sheaf(rng, n_max=5, dim_max=3)
    ctx = LaplacianContext(sh, strongly_convex_assignment(rng, sh))
    x0 = sh.random_cochain0(rng)
    res = diffuse(ctx, x0, DiffusionParams(tol=1e-10, max_iters=20_000, method=method), record_trace=True)
    if method == "euler" and not res.converged:
        return  # ill-conditioned draws need the accelerated method; covered by the cg case
    assert (res.x_final - harmonic_projection_oracle(ctx, x0)).norm(np.inf) <= 1e-6
    assert kernel_conservation_check(ctx, res.trace) <= 1e-8


@pytest.mark.parametrize("method", ["euler", "cg"])
@given(seed=seeds)
def test_lyapunov_descent(method, seed):
    rng = np.random.default_rng(seed)
    sh = random_sheaf(rng, n_max=5, dim_max=2)
    ctx = LaplacianContext(sh, strongly_convex_assignment(rng, sh))
    res = diffuse(ctx, sh.random_cochain0(rng), DiffusionParams(tol=1e-8, max_iters=2000, method=method))
    tr = np.array(res.psi_trace)
    assert np.all(np.diff(tr) <= 1e-12 * (1 + np.abs(tr[:-1])))


def test_linear_residual_decreases_geometrically():
    sh = constant_sheaf(Graph.path(6), 2)
    ctx = quad_ctx(sh)
    res = diffuse(ctx, sh.random_cochain0(np.random.default_rng(0)), DiffusionParams(tol=1e-10))
    r = np.array(res.residual_trace)
    # sampled every 50 steps the residual keeps shrinking
    assert np.all(np.diff(np.log(r[::50][:-1])) < 0)


def test_kernel_conserved_for_dissensus():
    sh = constant_sheaf(Graph.path(3), 1)
    ctx = LaplacianContext(sh, PotentialAssignment.uniform(sh, EdgePotential.dissensus))
    # dissensus has no minimizer and Psi is unbounded below: run a few steps only
    res = diffuse(ctx, sh.cochain0([[0.0], [1.0], [3.0]]), DiffusionParams(max_iters=25), record_trace=True)
    assert res.exact is None and not res.converged
    assert kernel_conservation_check(ctx, res.trace) <= 1e-8


def test_kernel_conservation_single_step_from_kernel():
    ctx = path3()
    res = diffuse(ctx, ctx.sheaf.cochain0([[1.0]] * 3), record_trace=True)
    assert kernel_conservation_check(ctx, res.trace) == 0.0


def test_nonconvex_diffusion_reaches_stationary_point():
    sh = constant_sheaf(Graph.complete(3), 2)
    ctx = LaplacianContext(sh, PotentialAssignment.uniform(sh, lambda d: EdgePotential.fixed_distance_sq(d, 1.0)))
    x0 = sh.cochain0([[0.0, 0.0], [0.3, 0.1], [-0.2, 0.4]])
    res = diffuse(ctx, x0, DiffusionParams(tol=1e-8))
    assert res.converged and res.exact is None
    d = [np.linalg.norm(b) for b in coboundary(sh, res.x_final).blocks()]
    assert np.allclose(d, 1.0, atol=1e-6)


def test_unreachable_minimizers_flag_inexact():
    sh = constant_sheaf(Graph.complete(3), 1)
    pa = PotentialAssignment(sh, tuple(EdgePotential.displacement([1.0]) for _ in range(3)))
    res = diffuse(LaplacianContext(sh, pa), sh.zeros0(), DiffusionParams(tol=1e-10))
    assert res.converged and res.exact is False


def test_params_validation():
    with pytest.raises(ValueError):
        DiffusionParams(alpha=0.0)
    with pytest.raises(ValueError):
        DiffusionParams(step=-1.0)
    with pytest.raises(ValueError):
        DiffusionParams(method="rk4")


def test_alpha_scales_time_not_limit():
    ctx = path3()
    x0 = ctx.sheaf.cochain0([[0.0], [3.0], [6.0]])
    a = diffuse(ctx, x0, DiffusionParams(alpha=0.5, tol=1e-10))
    b = diffuse(ctx, x0, DiffusionParams(alpha=2.0, tol=1e-10))
    assert np.allclose(a.x_final.data, b.x_final.data, atol=1e-8)


# --- oracle ------------------------------------------------------------------------


def test_oracle_fixes_kernel_and_averages_constants():
    ctx = path3()
    assert np.allclose(harmonic_projection_oracle(ctx, ctx.sheaf.cochain0([[2.0]] * 3)).data, 2.0)
    assert np.allclose(harmonic_projection_oracle(ctx, ctx.sheaf.cochain0([[0.0], [1.0], [5.0]])).data, 2.0)


@given(seeds)
def test_oracle_post_conditions(seed):
    rng = np.random.default_rng(seed)
    sh = random_sheaf(rng, n_max=6, dim_max=3)
    ctx = LaplacianContext(sh, strongly_convex_assignment(rng, sh))
    r = harmonic_projection_oracle(ctx, sh.random_cochain0(rng))
    b = ctx.minimizers
    assert np.max(np.abs(coboundary(sh, r).data - b.data), initial=0) <= 1e-8 * (1 + np.abs(b.data).max(initial=0))
    base = min_norm_preimage(sh, b).x
    assert is_global_section(sh, r - base, tol=1e-7)


def test_oracle_requires_minimizers():
    sh = constant_sheaf(Graph.path(2), 1)
    ctx = LaplacianContext(sh, PotentialAssignment.uniform(sh, EdgePotential.dissensus))
    with pytest.raises(MinimizerUndefined):
        harmonic_projection_oracle(ctx, sh.zeros0())


def test_kernel_projector_is_orthogonal_projector():
    sh = random_sheaf(np.random.default_rng(4))
    P = kernel_projector(sh)
    assert np.allclose(P, P.T) and np.allclose(P @ P, P, atol=1e-10)
    assert np.allclose(sh.coboundary_matrix @ P, 0.0, atol=1e-10)


# --- export ------------------------------------------------------------------------


def test_diffusion_csv(tmp_path):
    ctx = path3()
    res = diffuse(ctx, ctx.sheaf.cochain0([[0.0], [3.0], [6.0]]), DiffusionParams(tol=1e-6))
    path = tmp_path / "diff.csv"
    write_diffusion_csv(res, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iter", "psi", "residual"]
    assert len(rows) == res.iterations + 2
    assert float(rows[1][1]) == res.psi_trace[0]
