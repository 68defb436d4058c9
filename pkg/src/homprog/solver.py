"""Nonlinear homological programs and their ADMM solver.

A program minimizes ``sum_i f_i(x_i)`` over 0-cochains subject to ``L x = 0``
for the nonlinear sheaf Laplacian ``L``.  The solver splits it as

    x_i <- prox_{f_i / rho}(z_i - y_i)
    z   <- projection of x + y onto {L z = 0}     (sheaf diffusion)
    y_i <- y_i + x_i - z_i

and stops once ``|x - z|_inf < eps1``.  When some potential is not strongly
convex the z-step instead minimizes ``gamma U(dz) + rho/2 |x + y - z|^2``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy.linalg import cho_factor, cho_solve

from .dynamics import DIFFUSION_METHODS, DiffusionParams, DiffusionResult, LaplacianContext, diffuse
from .potentials import PotentialAssignment
from .qp import solve_box_qp
from .sheaf import CellularSheaf, Cochain0

__all__ = [
    "NodeObjective",
    "ZeroObjective",
    "QuadraticObjective",
    "BoxQuadraticObjective",
    "SmoothObjective",
    "HomologicalProgram",
    "ConvexityReport",
    "AdmmParams",
    "AdmmIterate",
    "AdmmReport",
    "AdmmResult",
    "ProxFailure",
    "check_convexity",
    "x_update",
    "z_update_projection",
    "z_update_relaxed",
    "y_update",
    "admm_solve",
    "write_report_csv",
]

log = logging.getLogger(__name__)

_FEAS_TOL = 1e-9


class ProxFailure(RuntimeError):
    def __init__(self, node: int, reason: str):
        self.node = node
        super().__init__(f"prox failed on node {node}: {reason}")


class NodeObjective:
    """Interface for node objectives ``f_i: R^dim -> R u {inf}``."""

    dim: int
    convex: bool = True
    closed_proper: bool = True

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def prox(self, v, rho: float) -> np.ndarray:
        """``argmin_x f(x) + rho/2 |x - v|^2``."""
        raise NotImplementedError


class ZeroObjective(NodeObjective):
    def __init__(self, dim: int):
        self.dim = int(dim)

    def evaluate(self, x) -> float:
        return 0.0

    def prox(self, v, rho):
        return np.array(v, dtype=float)


class QuadraticObjective(NodeObjective):
    """``f(x) = 1/2 x^T P x + q^T x + const``."""

    def __init__(self, P, q=None, const: float = 0.0):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        self.P = 0.5 * (P + P.T)
        self.dim = self.P.shape[0]
        self.q = np.zeros(self.dim) if q is None else np.asarray(q, dtype=float).ravel()
        self.const = float(const)
        self.convex = bool(np.linalg.eigvalsh(self.P).min() >= -1e-10) if self.dim else True
        self._factors: dict[float, tuple] = {}

    @classmethod
    def tracking(cls, target, weight: float = 1.0) -> QuadraticObjective:
        """``weight/2 |x - target|^2``."""
        a = np.atleast_1d(np.asarray(target, dtype=float))
        return cls(weight * np.eye(a.size), -weight * a, 0.5 * weight * float(a @ a))

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.P @ x + self.q @ x + self.const)

    def gradient(self, x) -> np.ndarray:
        return self.P @ np.asarray(x, dtype=float) + self.q

    def prox(self, v, rho):
        fac = self._factors.get(rho)
        if fac is None:
            fac = cho_factor(self.P + rho * np.eye(self.dim))
            self._factors[rho] = fac
        return cho_solve(fac, rho * np.asarray(v, dtype=float) - self.q)


class BoxQuadraticObjective(QuadraticObjective):
    """Quadratic plus the indicator of the box ``lo <= x <= hi``."""

    def __init__(self, P, q=None, lo=-np.inf, hi=np.inf, const: float = 0.0):
        super().__init__(P, q, const)
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,)).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,)).copy()
        if np.any(self.lo > self.hi):
            raise ValueError("infeasible bounds")

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo - _FEAS_TOL) or np.any(x > self.hi + _FEAS_TOL):
            return np.inf
        return super().evaluate(x)

    def prox(self, v, rho):
        H = self.P + rho * np.eye(self.dim)
        g = self.q - rho * np.asarray(v, dtype=float)
        res = solve_box_qp(H, g, self.lo, self.hi)
        if not res.converged:
            raise RuntimeError(f"box QP did not converge (residual {res.residual:.2e})")
        return res.u


class SmoothObjective(NodeObjective):
    """Generic differentiable objective; prox by gradient descent with backtracking."""

    def __init__(self, dim: int, fun: Callable, grad: Callable, convex: bool = True, tol: float = 1e-10):
        self.dim = int(dim)
        self.fun = fun
        self.grad = grad
        self.convex = convex
        self.tol = tol

    def evaluate(self, x) -> float:
        return float(self.fun(np.asarray(x, dtype=float)))

    def prox(self, v, rho, max_iter: int = 100_000):
        v = np.asarray(v, dtype=float)
        phi = lambda x: self.fun(x) + 0.5 * rho * (x - v) @ (x - v)  # noqa: E731
        x = v.copy()
        t = 1.0 / rho
        val = phi(x)
        for _ in range(max_iter):
            g = self.grad(x) + rho * (x - v)
            if np.max(np.abs(g)) <= self.tol:
                return x
            t *= 2.0
            while True:
                cand = x - t * g
                cv = phi(cand)
                if cv <= val - 0.5 * t * (g @ g) or t < 1e-20:
                    break
                t *= 0.5
            x, val = cand, cv
        raise RuntimeError("gradient descent prox hit its iteration cap")


@dataclass(frozen=True, eq=False)
class HomologicalProgram:
    """``minimize sum_i f_i(x_i)  subject to  L x = 0``."""

    sheaf: CellularSheaf
    potentials: PotentialAssignment
    objectives: tuple

    def __post_init__(self):
        objs = tuple(self.objectives)
        if len(objs) != self.sheaf.graph.node_count:
            raise ValueError("exactly one objective per node required")
        for i, (f, d) in enumerate(zip(objs, self.sheaf.node_dims)):
            if f.dim != d:
                raise ValueError(f"node {i}: objective dim {f.dim} != stalk dim {d}")
        object.__setattr__(self, "objectives", objs)

    @cached_property
    def ctx(self) -> LaplacianContext:
        return LaplacianContext(self.sheaf, self.potentials)

    def objective(self, x: Cochain0) -> float:
        return float(sum(f.evaluate(b) for f, b in zip(self.objectives, x.blocks())))


@dataclass
class ConvexityReport:
    convex_program: bool
    nonconvex_edges: list
    nondifferentiable_edges: list
    nonconvex_nodes: list
    strongly_convex_potentials: bool
    minimizers_in_image: bool | None
    recommended_mode: str
    messages: list[str] = field(default_factory=list)


def check_convexity(prog: HomologicalProgram) -> ConvexityReport:
    """Sufficient convexity test: every potential differentiable and convex,
    every node objective convex."""
    edges = prog.sheaf.graph.edges
    nonconvex = [edges[k] for k, p in enumerate(prog.potentials) if not p.convex]
    nondiff = [edges[k] for k, p in enumerate(prog.potentials) if not p.differentiable]
    bad_nodes = [i for i, f in enumerate(prog.objectives) if not getattr(f, "convex", False)]
    strong = prog.potentials.strongly_convex
    in_image = prog.ctx.minimizers_in_image if strong else None
    convex = not nonconvex and not nondiff and not bad_nodes
    msgs = []
    for e in nonconvex:
        msgs.append(f"edge {e}: potential is not convex")
    for e in nondiff:
        msgs.append(f"edge {e}: potential is not differentiable")
    for i in bad_nodes:
        msgs.append(f"node {i}: objective is not convex")
    projection_ok = strong and bool(in_image)
    if not strong:
        msgs.append("some potential is not strongly convex; use the relaxed z-update")
    elif not in_image:
        msgs.append("potential minimizers are not in the image of the coboundary; feasible set is empty")
    return ConvexityReport(
        convex_program=convex,
        nonconvex_edges=nonconvex,
        nondifferentiable_edges=nondiff,
        nonconvex_nodes=bad_nodes,
        strongly_convex_potentials=strong,
        minimizers_in_image=in_image,
        recommended_mode="projection" if projection_ok else "relaxed",
        messages=msgs,
    )


@dataclass(frozen=True)
class AdmmParams:
    rho: float = 1.0
    alpha: float = 1.0
    eps1: float = 1e-4
    eps2: float = 1e-6
    K: int = 500
    diffusion_max_iters: int = 100_000
    mode: str = "auto"
    gamma: float = 1.0
    # optional extra stop test on rho * |z_k+1 - z_k|_2
    eps_dual: float | None = None
    # inner tolerance starts here and halves each outer iteration down to eps2
    eps2_start: float | None = None
    diffusion_method: str = "euler"

    def __post_init__(self):
        for name in ("rho", "alpha", "eps1", "eps2", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.K < 1 or self.diffusion_max_iters < 1:
            raise ValueError("K and diffusion_max_iters must be >= 1")
        if self.mode not in ("auto", "projection", "relaxed"):
            raise ValueError(f"unknown z-update mode {self.mode!r}")
        if self.diffusion_method not in DIFFUSION_METHODS:
            raise ValueError(f"diffusion_method must be one of {DIFFUSION_METHODS}")

    def inner_tol(self, k: int) -> float:
        if self.eps2_start is None:
            return self.eps2
        return max(self.eps2, self.eps2_start * 0.5**k)


@dataclass
class AdmmIterate:
    iter: int
    primal_res: float
    dual_res: float
    objective: float
    inner_iters: int
    inner_converged: bool


@dataclass
class AdmmReport:
    iterates: list[AdmmIterate] = field(default_factory=list)
    status: str = "running"
    mode: str = "projection"

    @property
    def iterations(self) -> int:
        return len(self.iterates)

    @property
    def final_primal(self) -> float:
        return self.iterates[-1].primal_res if self.iterates else np.inf


@dataclass
class AdmmResult:
    z: Cochain0
    y: Cochain0
    x: Cochain0
    report: AdmmReport

    def __iter__(self):
        return iter((self.z, self.y, self.report))


def x_update(prog: HomologicalProgram, z: Cochain0, y: Cochain0, rho: float) -> Cochain0:
    if rho <= 0:
        raise ValueError("rho must be positive")
    v = z - y
    blocks = []
    for i, (f, vi) in enumerate(zip(prog.objectives, v.blocks())):
        try:
            xi = np.asarray(f.prox(vi, rho), dtype=float)
        except Exception as exc:  # surfaced with the node id
            raise ProxFailure(i, str(exc)) from exc
        if not np.all(np.isfinite(xi)):
            raise ProxFailure(i, "non-finite result")
        blocks.append(xi)
    return prog.sheaf.unflatten0(np.concatenate(blocks) if blocks else np.zeros(0))


def z_update_projection(
    prog: HomologicalProgram, v: Cochain0, params: DiffusionParams
) -> tuple[Cochain0, DiffusionResult]:
    """Project ``v`` by diffusion.  Stopping at ``|L z|_inf <= tol`` leaves z up
    to about ``tol / lambda_min`` from the constraint set, so nearly singular
    coboundaries need a proportionally smaller ``eps2``."""
    res = diffuse(prog.ctx, v, params)
    if not res.converged:
        log.warning("diffusion stopped at residual %.3e after %d steps", res.residual, res.iterations)
    return res.x_final, res


@dataclass
class RelaxedResult:
    z: Cochain0
    iterations: int
    grad_norm: float
    converged: bool


def z_update_relaxed(
    prog: HomologicalProgram,
    v: Cochain0,
    rho: float,
    tol: float = 1e-6,
    gamma: float = 1.0,
    max_iters: int = 100_000,
) -> tuple[Cochain0, RelaxedResult]:
    """Minimize ``gamma U(dz) + rho/2 |v - z|^2`` with L-BFGS.

    Coordinates no restriction map reads are set to ``v`` directly; the rest
    are optimized until the largest gradient entry is at most ``tol``.  With a
    nonconvex potential the result is a stationary point, not necessarily the
    global minimizer.  L-BFGS-B's line search compares function values, which
    stalls once the remaining decrease is below double-precision resolution of
    the objective; a Barzilai-Borwein polish on the gradient alone finishes.
    """
    ctx = prog.ctx
    prog.sheaf.check0(v)
    vd = v.data
    idx = ctx.coupled
    z = np.array(vd)
    if idx.size == 0:
        out = prog.sheaf.unflatten0(z)
        return out, RelaxedResult(out, 0, 0.0, True)

    def fun(s):
        z[idx] = s
        r = ctx._shift(z)
        d = s - vd[idx]
        val = gamma * ctx._psi_r(r) + 0.5 * rho * float(d @ d)
        g = gamma * ctx._lap_r(r)[idx] + rho * d
        return val, g

    sol = optimize.minimize(
        fun,
        vd[idx].copy(),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iters, "maxfun": 2 * max_iters, "gtol": tol, "ftol": 0.0, "maxcor": 20},
    )
    x, it = sol.x, int(sol.nit)
    _, g = fun(x)
    gn = float(np.max(np.abs(g)))
    if gn > tol:
        x, gn, extra = _bb_polish(fun, x, g, tol, 1.0 / (rho + gamma * ctx.spectral_estimate), max_iters)
        it += extra
    z[idx] = x
    out = prog.sheaf.unflatten0(z)
    return out, RelaxedResult(out, it, gn, gn <= tol)


def _bb_polish(fun, x, g, tol, h0, max_iters):
    """Barzilai-Borwein gradient steps without function values; keeps the best iterate."""
    best_x, best = x, float(np.max(np.abs(g)))
    h = h0
    k = 0
    for k in range(1, min(max_iters, 1000) + 1):
        x_new = x - h * g
        _, g_new = fun(x_new)
        dx, dg = x_new - x, g_new - g
        curv = float(dx @ dg)
        h = float(dx @ dx) / curv if curv > 0 else h0
        x, g = x_new, g_new
        gn = float(np.max(np.abs(g)))
        if gn < best:
            best_x, best = x, gn
        if best <= tol:
            break
    return best_x, best, k


def y_update(y: Cochain0, x: Cochain0, z: Cochain0) -> Cochain0:
    return y + x - z


def admm_solve(
    prog: HomologicalProgram,
    params: AdmmParams = AdmmParams(),
    z0: Cochain0 | None = None,
    y0: Cochain0 | None = None,
) -> AdmmResult:
    """Distributed solve: x-, z- and y-updates until ``|x - z|_inf < eps1`` or K sweeps."""
    sh = prog.sheaf
    z = sh.zeros0() if z0 is None else z0
    y = sh.zeros0() if y0 is None else y0
    sh.check0(z)
    sh.check0(y)
    mode = params.mode
    if mode == "auto":
        diag = check_convexity(prog)
        mode = diag.recommended_mode
        if not diag.convex_program:
            log.info("program is not certified convex: %s", "; ".join(diag.messages))
    report = AdmmReport(mode=mode)
    x = z
    rho = params.rho
    for k in range(1, params.K + 1):
        x = x_update(prog, z, y, rho)
        v = x + y
        z_prev = z
        tol = params.inner_tol(k - 1)
        if mode == "projection":
            dp = DiffusionParams(alpha=params.alpha, tol=tol, max_iters=params.diffusion_max_iters,
                                 method=params.diffusion_method)
            z, info = z_update_projection(prog, v, dp)
            inner = (info.iterations, info.converged)
        else:
            z, info = z_update_relaxed(prog, v, rho, tol, params.gamma, params.diffusion_max_iters)
            inner = (info.iterations, info.converged)
        primal = (x - z).norm(np.inf)
        dual = rho * (z - z_prev).norm()
        report.iterates.append(AdmmIterate(k, primal, dual, prog.objective(z), *inner))
        if primal < params.eps1 and (params.eps_dual is None or dual < params.eps_dual):
            report.status = "converged"
            break
        y = y_update(y, x, z)
    else:
        report.status = "max_iters"
    return AdmmResult(z=z, y=y, x=x, report=report)


def write_report_csv(report: AdmmReport, path, prefix: Sequence = (), header: bool = True, mode="w"):
    """Columns: iter, primal_res, dual_res, objective (optionally prefixed)."""
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([*(p[0] for p in prefix), "iter", "primal_res", "dual_res", "objective"])
        for it in report.iterates:
            w.writerow(
                [*(p[1] for p in prefix), it.iter, f"{it.primal_res:.17g}", f"{it.dual_res:.17g}", f"{it.objective:.17g}"]
            )
