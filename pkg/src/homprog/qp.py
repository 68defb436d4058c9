"""Small dense box-constrained convex quadratic programs.

``minimize 1/2 u^T H u + g^T u  subject to  lo <= u <= hi`` with ``H`` positive
definite.  A primal-dual active-set iteration usually terminates in a handful
of linear solves; projected gradient with backtracking is the fallback when
the active set cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BoxQPResult", "solve_box_qp", "projected_gradient_residual"]


@dataclass
class BoxQPResult:
    u: np.ndarray
    iterations: int
    residual: float
    method: str
    converged: bool


def projected_gradient_residual(H, g, u, lo, hi) -> float:
    grad = H @ u + g
    return float(np.max(np.abs(u - np.clip(u - grad, lo, hi)), initial=0.0))


def solve_box_qp(H, g, lo, hi, tol: float = 1e-10, max_iter: int = 50) -> BoxQPResult:
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = g.size
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    if np.any(lo > hi):
        raise ValueError("infeasible box: some lower bound exceeds its upper bound")
    if n == 0:
        return BoxQPResult(np.zeros(0), 0, 0.0, "empty", True)
    scale = max(1.0, float(np.max(np.abs(g))))

    u = np.clip(np.linalg.solve(H, -g), lo, hi)
    lam = -(H @ u + g)
    c = float(np.mean(np.diag(H)))
    seen = set()
    it = 0
    for it in range(1, max_iter + 1):
        up = lam + c * (u - hi) > 0
        down = lam + c * (u - lo) < 0
        key = (up.tobytes(), down.tobytes())
        if key in seen:
            break
        seen.add(key)
        act = up | down
        free = ~act
        u = np.where(up, hi, np.where(down, lo, u))
        if free.any():
            rhs = -g[free] - H[np.ix_(free, act)] @ u[act]
            u[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        lam = np.where(act, -(H @ u + g), 0.0)
    if np.all(u >= lo) and np.all(u <= hi):
        res = projected_gradient_residual(H, g, u, lo, hi)
        if res <= tol * scale:
            return BoxQPResult(u, it, res, "active_set", True)
    return _projected_gradient(H, g, lo, hi, np.clip(u, lo, hi), tol * scale)


def _projected_gradient(H, g, lo, hi, u, tol, max_iter: int = 100_000) -> BoxQPResult:
    """Projected gradient with backtracking on the step length."""
    f = lambda v: 0.5 * v @ H @ v + g @ v  # noqa: E731
    step = 1.0 / np.linalg.eigvalsh(H).max()
    fu = f(u)
    res = projected_gradient_residual(H, g, u, lo, hi)
    k = 0
    for k in range(1, max_iter + 1):
        if res <= tol:
            break
        grad = H @ u + g
        t = 2.0 * step
        while True:
            cand = np.clip(u - t * grad, lo, hi)
            d = cand - u
            fc = f(cand)
            if fc <= fu + grad @ d + (0.5 / t) * (d @ d) or t < 1e-16:
                break
            t *= 0.5
        u, fu = cand, fc
        res = projected_gradient_residual(H, g, u, lo, hi)
    return BoxQPResult(u, k, res, "projected_gradient", res <= tol)
