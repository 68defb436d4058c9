"""Nonlinear sheaf Laplacian and the sheaf diffusion integrator.

Diffusion integrates ``dx/dt = -alpha * L x`` with explicit Euler steps and
halves the step whenever ``Psi(x) = U(dx)`` would increase.  For strongly
convex potentials whose minimizers ``b`` lie in the image of the coboundary,
the flow converges to the orthogonal projection of the initial condition onto
``pinv(d) b + ker d``, which is the zero set of the Laplacian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .potentials import MinimizerUndefined, PotentialAssignment, minimizer_cochain, total_gradient
from .sheaf import (
    CellularSheaf,
    Cochain0,
    LayoutError,
    _offsets,
    assemble_coboundary_matrix,
    coboundary,
    coboundary_transpose,
    min_norm_preimage,
)

__all__ = [
    "LaplacianContext",
    "DIFFUSION_METHODS",
    "DiffusionParams",
    "DiffusionResult",
    "apply_laplacian",
    "apply_laplacian_local",
    "psi",
    "diffuse",
    "harmonic_projection_oracle",
    "kernel_projector",
    "kernel_conservation_check",
    "write_diffusion_csv",
]


_DENSE_LIMIT = 250_000


@dataclass(frozen=True, eq=False)
class LaplacianContext:
    sheaf: CellularSheaf
    potentials: PotentialAssignment

    def __post_init__(self):
        if self.potentials.sheaf is not self.sheaf and self.potentials.sheaf.edge_dims != self.sheaf.edge_dims:
            raise ValueError("potential assignment does not match the sheaf's edge stalks")

    @cached_property
    def _kernels(self):
        """Sparse coboundary plus a block-diagonal quadratic part of ``U``.

        Quadratic potentials are evaluated in one sparse product; the rest
        (fixed-distance kinds) fall back to per-edge calls.
        """
        sh = self.sheaf
        D = assemble_coboundary_matrix(sh)
        dense = D.size <= _DENSE_LIMIT
        if not dense:
            D = sparse.csr_matrix(D)
        eo = _offsets(sh.edge_dims)
        blocks, centers, other = [], [], []
        for k, p in enumerate(self.potentials.potentials):
            q = p.quadratic_form()
            d = sh.edge_dims[k]
            if q is None:
                blocks.append(np.zeros((d, d)))
                centers.append(np.zeros(d))
                other.append((slice(eo[k], eo[k + 1]), p))
            else:
                blocks.append(q[0])
                centers.append(q[1])
        if dense:
            G = np.zeros((sh.dim1, sh.dim1))
            for k, B in enumerate(blocks):
                G[eo[k] : eo[k + 1], eo[k] : eo[k + 1]] = B
            DT = np.ascontiguousarray(D.T)
        else:
            G = sparse.block_diag(blocks, format="csr") if blocks else sparse.csr_matrix((0, 0))
            DT = D.T.tocsr()
        m = np.concatenate(centers) if centers else np.zeros(0)
        return D, DT, G, m, other

    # flat-array kernels used by the integrators; r = dx - m is shared
    def _shift(self, x: np.ndarray) -> np.ndarray:
        D, _, _, m, _ = self._kernels
        return D @ x - m

    def _psi_r(self, r: np.ndarray) -> float:
        G, other = self._kernels[2], self._kernels[4]
        val = 0.5 * float(r @ (G @ r))
        for se, p in other:
            val += p.value(r[se])
        return val

    def _lap_r(self, r: np.ndarray) -> np.ndarray:
        DT, G, other = self._kernels[1], self._kernels[2], self._kernels[4]
        g = G @ r
        for se, p in other:
            g[se] = p.gradient(r[se])
        return DT @ g

    def _psi(self, x: np.ndarray) -> float:
        return self._psi_r(self._shift(x))

    def _lap(self, x: np.ndarray) -> np.ndarray:
        return self._lap_r(self._shift(x))

    @cached_property
    def coupled(self) -> np.ndarray:
        """Indices of 0-cochain coordinates that some restriction map reads."""
        D = self._kernels[0]
        nz = np.abs(D).sum(axis=0)
        return np.flatnonzero(np.asarray(nz).ravel() > 0)

    @cached_property
    def spectral_estimate(self) -> float:
        """Power-iteration estimate of ``|d|^2`` times the gradient Lipschitz bound."""
        sh = self.sheaf
        if sh.dim0 == 0 or sh.dim1 == 0:
            return 1.0
        D, DT = self._kernels[:2]
        v = np.random.default_rng(0).standard_normal(sh.dim0)
        lam = 0.0
        for _ in range(60):
            u = DT @ (D @ v)
            nu = np.linalg.norm(u)
            if nu == 0.0:
                break
            lam = float(v @ u / (v @ v))
            v = u / nu
        lip = self.potentials.lipschitz
        if lip is None or lip == 0.0:
            lip = 1.0
        return max(lam, 1e-12) * lip

    @cached_property
    def minimizers(self):
        try:
            return minimizer_cochain(self.potentials)
        except MinimizerUndefined:
            return None

    @cached_property
    def minimizers_in_image(self) -> bool | None:
        b = self.minimizers
        if b is None:
            return None
        return min_norm_preimage(self.sheaf, b, tol=1e-8).in_image


def apply_laplacian(ctx: LaplacianContext, x: Cochain0) -> Cochain0:
    """``L x = d^T grad U(d x)``."""
    ctx.sheaf.check0(x)
    y = coboundary(ctx.sheaf, x)
    return coboundary_transpose(ctx.sheaf, total_gradient(ctx.potentials, y))


def apply_laplacian_local(
    ctx: LaplacianContext, i: int, x_i, neighbor_states: Mapping[int, np.ndarray]
) -> np.ndarray:
    """Block ``i`` of the Laplacian from node ``i``'s own state and its neighbors'.

    Each edge difference is taken in the canonical orientation, so the result
    equals the global form for potentials that are not odd (e.g. displacement).
    """
    sh = ctx.sheaf
    nbrs = sh.graph.neighbors[i]
    missing = set(nbrs) - set(neighbor_states)
    if missing:
        raise KeyError(f"missing neighbor states for node {i}: {sorted(missing)}")
    x_i = np.asarray(x_i, dtype=float)
    if x_i.shape != (sh.node_dims[i],):
        raise LayoutError(f"node {i} state must have length {sh.node_dims[i]}")
    out = np.zeros(sh.node_dims[i])
    for j in nbrs:
        k = sh.graph.find_edge(i, j)
        F_self = sh.restriction(i, k)
        F_other = sh.restriction(j, k)
        xj = np.asarray(neighbor_states[j], dtype=float)
        sign = 1.0 if i < j else -1.0
        y = sign * (F_self @ x_i - F_other @ xj)
        out += sign * (F_self.T @ ctx.potentials[k].gradient(y))
    return out


def psi(ctx: LaplacianContext, x: Cochain0) -> float:
    """Lyapunov function ``U(d x)``."""
    ctx.sheaf.check0(x)
    return ctx._psi(x.data)


DIFFUSION_METHODS = ("euler", "cg")


@dataclass(frozen=True)
class DiffusionParams:
    """``method="euler"`` integrates the flow; ``"cg"`` is nonlinear conjugate
    gradient on ``Psi`` along the same Laplacian directions, so it reaches the
    same limit in far fewer steps on ill-conditioned sheaves."""

    alpha: float = 1.0
    step: float | None = None
    tol: float = 1e-9
    max_iters: int = 100_000
    method: str = "euler"

    def __post_init__(self):
        if self.alpha <= 0 or self.tol <= 0 or self.max_iters < 1:
            raise ValueError("alpha, tol and max_iters must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.method not in DIFFUSION_METHODS:
            raise ValueError(f"method must be one of {DIFFUSION_METHODS}")


@dataclass
class DiffusionResult:
    x_final: Cochain0
    iterations: int
    residual: float
    psi_trace: list[float]
    residual_trace: list[float]
    converged: bool
    step: float
    step_underflow: bool = False
    exact: bool | None = None
    trace: list[Cochain0] | None = field(default=None, repr=False)


def diffuse(
    ctx: LaplacianContext,
    x0: Cochain0,
    params: DiffusionParams = DiffusionParams(),
    record_trace: bool = False,
) -> DiffusionResult:
    """Integrate the sheaf heat equation until ``|L x|_inf <= tol``.

    ``exact`` reports whether the limit is the true projection: True when all
    potentials are strongly convex with minimizers in the image of ``d``, False
    when they are strongly convex but ``b`` is unreachable, None otherwise.
    """
    sh = ctx.sheaf
    sh.check0(x0)
    a = params.alpha
    h0 = params.step if params.step is not None else 1.0 / (a * ctx.spectral_estimate)
    h = h0
    x = np.array(x0.data)
    r = ctx._shift(x)
    g = ctx._lap_r(r)
    res = float(np.max(np.abs(g))) if g.size else 0.0
    val = ctx._psi_r(r)
    psi_trace = [val]
    res_trace = [res]
    trace = [x0] if record_trace else None
    it = 0
    underflow = False
    cg = params.method == "cg"
    d = -g
    gg = float(g @ g)
    while res > params.tol and it < params.max_iters:
        if cg:
            slope = float(g @ d)
            if slope >= 0.0:  # lost descent: restart along -L x
                d, slope = -g, -gg
            # secant curvature along d gives the first trial step (exact for quadratic Psi)
            curv = float((ctx._lap(x + h0 * d) - g) @ d) / h0
            t = -slope / curv if curv > 0 else h0
            while True:
                x_new = x + t * d
                r_new = ctx._shift(x_new)
                val_new = ctx._psi_r(r_new)
                if val_new <= val + 1e-4 * t * slope + 1e-14 * (1.0 + abs(val)):
                    break
                t *= 0.5
                if t < h0 * 2.0**-60:
                    underflow = True
                    break
            h = t
        else:
            while True:
                x_new = x - (h * a) * g
                r_new = ctx._shift(x_new)
                val_new = ctx._psi_r(r_new)
                if val_new <= val + 1e-14 * (1.0 + abs(val)):
                    break
                h *= 0.5
                if h < h0 * 2.0**-60:
                    underflow = True
                    break
        if underflow:
            break
        x, val = x_new, val_new
        g_new = ctx._lap_r(r_new)
        if cg:
            # Polak-Ribiere+, restarted every dim0 steps
            gg_new = float(g_new @ g_new)
            beta = max(0.0, float(g_new @ (g_new - g)) / gg) if gg > 0 and (it + 1) % max(sh.dim0, 1) else 0.0
            d = -g_new + beta * d
            gg = gg_new
        g = g_new
        res = float(np.max(np.abs(g)))
        it += 1
        psi_trace.append(val)
        res_trace.append(res)
        if record_trace:
            trace.append(sh.unflatten0(x))

    exact = ctx.minimizers_in_image if ctx.potentials.strongly_convex else None
    return DiffusionResult(
        x_final=sh.unflatten0(x),
        iterations=it,
        residual=res,
        psi_trace=psi_trace,
        residual_trace=res_trace,
        converged=res <= params.tol,
        step=h,
        step_underflow=underflow,
        exact=exact,
        trace=trace,
    )


def harmonic_projection_oracle(ctx: LaplacianContext, x0: Cochain0) -> Cochain0:
    """Dense reference for the diffusion limit: ``x0 - pinv(D) D x0 + pinv(D) b``."""
    b = minimizer_cochain(ctx.potentials)
    ctx.sheaf.check0(x0)
    D = assemble_coboundary_matrix(ctx.sheaf)
    Dp = np.linalg.pinv(D, rcond=1e-12)
    x = x0.data - Dp @ (D @ x0.data) + Dp @ b.data
    return ctx.sheaf.unflatten0(x)


def kernel_projector(sheaf: CellularSheaf, rtol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto ``ker d`` from an SVD of the assembled matrix."""
    D = assemble_coboundary_matrix(sheaf)
    if D.size == 0:
        return np.eye(sheaf.dim0)
    _, s, vt = np.linalg.svd(D)
    rank = int(np.sum(s > rtol * max(s.max(initial=0.0), 1.0)))
    N = vt[rank:].T
    return N @ N.T


def kernel_conservation_check(ctx: LaplacianContext, trace: Sequence[Cochain0]) -> float:
    """Largest drift of the ``ker d`` component along a diffusion trace."""
    if not trace:
        return 0.0
    P = kernel_projector(ctx.sheaf)
    p0 = P @ trace[0].data
    return max(float(np.linalg.norm(P @ x.data - p0)) for x in trace)


def write_diffusion_csv(result: DiffusionResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "psi", "residual"])
        for k, (p, r) in enumerate(zip(result.psi_trace, result.residual_trace)):
            w.writerow([k, f"{p:.17g}", f"{r:.17g}"])
