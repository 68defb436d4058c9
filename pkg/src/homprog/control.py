"""Optimal control as homological programs and the multi-agent MPC harness.

An agent's finite-horizon trajectory is stored as one flat vector in the
node order of its dynamics sheaf (a path ``v0 - v1 - ... - vT``)::

    (x(1), u(1), x(2), u(2), ..., x(T-1), u(T-1), x(T))

``v0`` carries the zero-dimensional stalk, ``v1..v(T-1)`` carry ``x(t) + u(t)``
and ``vT`` carries ``x(T)``.  Coordination between agents acts on the terminal
state ``x(T)`` through restriction maps composed with a terminal selector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .potentials import EdgePotential, PotentialAssignment, SplitPotential, minimizer_cochain, split
from .sheaf import CellularSheaf, Graph, coboundary
from .solver import AdmmParams, AdmmResult, HomologicalProgram, NodeObjective, admm_solve
from .qp import solve_box_qp

__all__ = [
    "LTISystem",
    "double_integrator",
    "DynamicsSheafSpec",
    "StageCost",
    "AgentOCP",
    "AgentObjective",
    "AgentSpec",
    "CoordinationEdge",
    "Scenario",
    "StepRecord",
    "TrajectoryLog",
    "SELECTORS",
    "WARM_START_MODES",
    "MPCStep",
    "selector",
    "trajectory_dim",
    "pack_trajectory",
    "unpack_trajectory",
    "rollout",
    "build_dynamics_sheaf",
    "dynamics_residual",
    "is_admissible",
    "agent_objective",
    "build_coordination_program",
    "mpc_step",
    "run_mpc",
    "coordination_metrics",
    "build_multidomain_scenario",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LTISystem:
    """``x(t+1) = A x(t) + B u(t)``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(A.shape[0], -1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError(f"nonconforming A {A.shape} and B {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x, u) -> np.ndarray:
        return self.A @ x + self.B @ u


def double_integrator(d: int, dt: float) -> LTISystem:
    """Euler discretization of ``p' = v, v' = u`` in ``R^d``; state ``(p, v)``."""
    I = np.eye(d)
    Z = np.zeros((d, d))
    A = np.block([[I, dt * I], [Z, I]])
    B = np.vstack([Z, dt * I])
    return LTISystem(A, B)


@dataclass(frozen=True, eq=False)
class DynamicsSheafSpec:
    system: LTISystem
    horizon: int
    initial_state: np.ndarray

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon T must be at least 2")
        c = np.asarray(self.initial_state, dtype=float).ravel()
        if c.shape != (self.system.n,):
            raise ValueError(f"initial state must have length {self.system.n}")
        object.__setattr__(self, "initial_state", c)


def trajectory_dim(n: int, m: int, T: int) -> int:
    return (T - 1) * (n + m) + n


def pack_trajectory(xs, us) -> np.ndarray:
    """Interleave states ``xs`` (T x n) and controls ``us`` ((T-1) x m)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.asarray(us, dtype=float).reshape(xs.shape[0] - 1, -1)
    parts = []
    for t in range(len(us)):
        parts += [xs[t], us[t]]
    parts.append(xs[-1])
    return np.concatenate(parts)


def unpack_trajectory(w, n: int, m: int, T: int) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    if w.size != trajectory_dim(n, m, T):
        raise ValueError("trajectory vector has the wrong length")
    head = w[: (T - 1) * (n + m)].reshape(T - 1, n + m)
    xs = np.vstack([head[:, :n], w[-n:][None, :]])
    return xs, head[:, n:].copy()


def rollout(system: LTISystem, c, us) -> np.ndarray:
    """States ``x(1..T)`` from ``x(1) = c`` under controls ``us``."""
    xs = [np.asarray(c, dtype=float)]
    for u in np.asarray(us, dtype=float).reshape(-1, system.m):
        xs.append(system.step(xs[-1], u))
    return np.array(xs)


def build_dynamics_sheaf(spec: DynamicsSheafSpec) -> tuple[CellularSheaf, PotentialAssignment]:
    """Path-graph sheaf whose Laplacian zeros are exactly the admissible trajectories.

    With edges oriented ``v(t) -> v(t+1)``, the initial edge reads ``0 - x(1)``,
    so its displacement target is ``-c``.
    """
    sys_, T, c = spec.system, spec.horizon, spec.initial_state
    n, m = sys_.n, sys_.m
    graph = Graph.path(T + 1)
    node_dims = (0,) + (n + m,) * (T - 1) + (n,)
    proj = np.hstack([np.eye(n), np.zeros((n, m))])
    AB = np.hstack([sys_.A, sys_.B])
    maps = [(np.zeros((n, 0)), proj)]
    pots = [EdgePotential.displacement(-c)]
    for t in range(1, T):
        maps.append((AB, proj if t + 1 < T else np.eye(n)))
        pots.append(EdgePotential.quadratic(n))
    sheaf = CellularSheaf(graph, node_dims, (n,) * T, tuple(maps))
    return sheaf, PotentialAssignment(sheaf, tuple(pots))


def dynamics_residual(spec: DynamicsSheafSpec, w) -> float:
    """``max_e |(dw)_e - b_e|``; zero exactly on admissible trajectories."""
    sheaf, pa = build_dynamics_sheaf(spec)
    x = sheaf.unflatten0(np.asarray(w, dtype=float))
    return (coboundary(sheaf, x) - minimizer_cochain(pa)).max_block_norm()


def is_admissible(spec: DynamicsSheafSpec, w, tol: float = 1e-9) -> bool:
    return dynamics_residual(spec, w) <= tol


@dataclass(frozen=True, eq=False)
class StageCost:
    """``1/2 (x - x_ref)^T Q (x - x_ref) + 1/2 (u - u_ref)^T R (u - u_ref)``."""

    Q: np.ndarray
    R: np.ndarray
    x_ref: np.ndarray | None = None
    u_ref: np.ndarray | None = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        xr = np.zeros(Q.shape[0]) if self.x_ref is None else np.asarray(self.x_ref, dtype=float).ravel()
        ur = np.zeros(R.shape[0]) if self.u_ref is None else np.asarray(self.u_ref, dtype=float).ravel()
        object.__setattr__(self, "x_ref", xr)
        object.__setattr__(self, "u_ref", ur)

    def __call__(self, x, u) -> float:
        dx = np.asarray(x) - self.x_ref
        du = np.asarray(u) - self.u_ref
        return float(0.5 * dx @ self.Q @ dx + 0.5 * du @ self.R @ du)


@dataclass(frozen=True, eq=False)
class AgentOCP:
    spec: DynamicsSheafSpec
    stage_costs: tuple
    u_lo: np.ndarray
    u_hi: np.ndarray

    def __post_init__(self):
        n, m, T = self.spec.system.n, self.spec.system.m, self.spec.horizon
        costs = self.stage_costs
        if isinstance(costs, StageCost):
            costs = (costs,) * (T - 1)
        costs = tuple(costs)
        if len(costs) != T - 1:
            raise ValueError(f"need {T - 1} stage costs, got {len(costs)}")
        for c in costs:
            if c.Q.shape != (n, n) or c.R.shape != (m, m):
                raise ValueError("stage cost dimensions do not match the system")
        lo = np.broadcast_to(np.asarray(self.u_lo, dtype=float), (m,)).copy()
        hi = np.broadcast_to(np.asarray(self.u_hi, dtype=float), (m,)).copy()
        if np.any(lo > hi):
            raise ValueError("infeasible control bounds: lo > hi")
        object.__setattr__(self, "stage_costs", costs)
        object.__setattr__(self, "u_lo", lo)
        object.__setattr__(self, "u_hi", hi)


class AgentObjective(NodeObjective):
    """Stage costs plus the indicator of admissible, box-feasible trajectories.

    States are eliminated (``w = M u + w0``), so every prox is a box QP in the
    controls alone.
    """

    def __init__(self, ocp: AgentOCP):
        self.ocp = ocp
        sys_, T = ocp.spec.system, ocp.spec.horizon
        n, m = sys_.n, sys_.m
        self.n, self.m, self.T = n, m, T
        self.dim = trajectory_dim(n, m, T)
        self.convex = all(np.linalg.eigvalsh(c.Q).min() >= -1e-10 and np.linalg.eigvalsh(c.R).min() >= -1e-10
                          for c in ocp.stage_costs)
        nu = (T - 1) * m
        self.w0 = pack_trajectory(rollout(sys_, ocp.spec.initial_state, np.zeros((T - 1, m))), np.zeros((T - 1, m)))
        M = np.zeros((self.dim, nu))
        for k in range(nu):
            e = np.zeros(nu)
            e[k] = 1.0
            xs = rollout(sys_, np.zeros(n), e.reshape(T - 1, m))
            M[:, k] = pack_trajectory(xs, e.reshape(T - 1, m))
        self.M = M
        P = np.zeros((self.dim, self.dim))
        p = np.zeros(self.dim)
        const = 0.0
        for t, c in enumerate(ocp.stage_costs):
            o = t * (n + m)
            P[o : o + n, o : o + n] = c.Q
            P[o + n : o + n + m, o + n : o + n + m] = c.R
            p[o : o + n] = -c.Q @ c.x_ref
            p[o + n : o + n + m] = -c.R @ c.u_ref
            const += 0.5 * (c.x_ref @ c.Q @ c.x_ref + c.u_ref @ c.R @ c.u_ref)
        self.P, self.p, self.const = P, p, const
        self.lo = np.tile(ocp.u_lo, T - 1)
        self.hi = np.tile(ocp.u_hi, T - 1)
        self._MtPM = M.T @ P @ M
        self._MtM = M.T @ M
        self._Mt_rhs0 = M.T @ (P @ self.w0 + p)

    def controls(self, w) -> np.ndarray:
        return unpack_trajectory(w, self.n, self.m, self.T)[1].ravel()

    def cost(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.P @ w + self.p @ w + self.const)

    def evaluate(self, w) -> float:
        w = np.asarray(w, dtype=float)
        u = self.controls(w)
        scale = 1.0 + float(np.max(np.abs(w), initial=0.0))
        if np.any(u < self.lo - 1e-9) or np.any(u > self.hi + 1e-9):
            return np.inf
        if np.max(np.abs(self.M @ u + self.w0 - w), initial=0.0) > 1e-8 * scale:
            return np.inf
        return self.cost(w)

    def prox(self, v, rho):
        v = np.asarray(v, dtype=float)
        H = self._MtPM + rho * self._MtM
        g = self._Mt_rhs0 + rho * (self.M.T @ (self.w0 - v))
        res = solve_box_qp(H, g, self.lo, self.hi)
        if not res.converged:
            raise RuntimeError(f"trajectory box QP did not converge (residual {res.residual:.2e})")
        return self.M @ res.u + self.w0

    def solve(self) -> np.ndarray:
        """Minimizer of the agent's own problem (needs positive definite R)."""
        res = solve_box_qp(self._MtPM, self._Mt_rhs0, self.lo, self.hi)
        return self.M @ res.u + self.w0


def agent_objective(ocp: AgentOCP) -> AgentObjective:
    return AgentObjective(ocp)


# ---------------------------------------------------------------------------
# scenarios


def selector(name: str, d: int) -> np.ndarray:
    """Named linear maps from a ``(p, v)`` state in ``R^{2d}``."""
    I = np.eye(2 * d)
    if name == "full_state":
        return I
    if name == "position":
        return I[:d]
    if name == "velocity":
        return I[d:]
    if name == "x_position":
        return I[:1]
    if name == "planar_lift":
        if d != 2:
            raise ValueError("planar_lift applies to planar (d=2) agents")
        return np.vstack([I[:2], np.zeros((1, 4))])
    raise ValueError(f"unknown restriction selector {name!r}")


SELECTORS = ("full_state", "position", "velocity", "x_position", "planar_lift")


@dataclass(frozen=True, eq=False)
class AgentSpec:
    d: int
    Q: np.ndarray
    R: np.ndarray
    x_ref: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return 2 * self.d


@dataclass(frozen=True, eq=False)
class CoordinationEdge:
    i: int
    j: int
    sel_i: str
    sel_j: str
    potential: EdgePotential | SplitPotential

    def maps(self, agents: Sequence[AgentSpec]) -> tuple[np.ndarray, np.ndarray]:
        return selector(self.sel_i, agents[self.i].d), selector(self.sel_j, agents[self.j].d)


WARM_START_MODES = ("none", "primal", "primal_dual")


@dataclass(eq=False)
class Scenario:
    """A multi-agent MPC experiment.

    ``warm_start`` selects what carries over between MPC steps: nothing (each
    solve starts from the agents' zero-control rollouts), the shifted primal
    trajectories, or those plus the scaled dual.  Carrying the dual over is
    only safe when the coordination constraint stays feasible; otherwise it
    winds up across steps.
    """

    name: str
    kind: str
    agents: list[AgentSpec]
    edges: list[CoordinationEdge]
    horizon: int = 10
    dt: float = 0.1
    admm: AdmmParams = field(default_factory=lambda: AdmmParams(K=10))
    mpc_steps: int = 100
    seed: int = 0
    initial_states: list[np.ndarray] | None = None
    init_low: float = -5.0
    init_high: float = 5.0
    warm_start: str = "none"

    def __post_init__(self):
        if self.warm_start not in WARM_START_MODES:
            raise ValueError(f"warm_start must be one of {WARM_START_MODES}")
        if not self.agents:
            raise ValueError("scenario needs at least one agent")
        for e in self.edges:
            if not (0 <= e.i < e.j < len(self.agents)):
                raise ValueError(f"edge ({e.i}, {e.j}) must satisfy 0 <= i < j < agent count")
            Fi, Fj = e.maps(self.agents)
            if Fi.shape[0] != Fj.shape[0] or Fi.shape[0] != e.potential.dim:
                raise ValueError(f"edge ({e.i}, {e.j}): restriction/potential dimensions disagree")

    @property
    def graph(self) -> Graph:
        return Graph(len(self.agents), tuple((e.i, e.j) for e in self.edges))

    def system(self, k: int) -> LTISystem:
        return double_integrator(self.agents[k].d, self.dt)

    def draw_initial_states(self) -> list[np.ndarray]:
        if self.initial_states is not None:
            return [np.asarray(s, dtype=float).copy() for s in self.initial_states]
        rng = np.random.default_rng(self.seed)
        return [rng.uniform(self.init_low, self.init_high, size=a.n) for a in self.agents]


def build_coordination_program(scenario: Scenario, current_states: Sequence) -> HomologicalProgram:
    """Agents' trajectories on the nodes, coordination on terminal states."""
    T = scenario.horizon
    agents = scenario.agents
    if len(current_states) != len(agents):
        raise ValueError("one current state per agent required")
    objectives = []
    for k, (a, c) in enumerate(zip(agents, current_states)):
        spec = DynamicsSheafSpec(scenario.system(k), T, c)
        cost = StageCost(a.Q, a.R, a.x_ref)
        objectives.append(AgentObjective(AgentOCP(spec, cost, a.u_lo, a.u_hi)))
    dims = [o.dim for o in objectives]

    def terminal(k: int, F: np.ndarray) -> np.ndarray:
        n = agents[k].n
        out = np.zeros((F.shape[0], dims[k]))
        out[:, dims[k] - n :] = F
        return out

    maps = []
    for e in scenario.edges:
        Fi, Fj = e.maps(agents)
        maps.append((terminal(e.i, Fi), terminal(e.j, Fj)))
    sheaf = CellularSheaf(scenario.graph, tuple(dims), tuple(e.potential.dim for e in scenario.edges), tuple(maps))
    pa = PotentialAssignment(sheaf, tuple(e.potential for e in scenario.edges))
    return HomologicalProgram(sheaf, pa, tuple(objectives))


def _shift(w: np.ndarray, n: int, m: int, T: int) -> np.ndarray:
    xs, us = unpack_trajectory(w, n, m, T)
    xs = np.vstack([xs[1:], xs[-1:]])
    us = np.vstack([us[1:], us[-1:]])
    return pack_trajectory(xs, us)


@dataclass
class MPCStep:
    controls: list[np.ndarray]
    result: AdmmResult | None
    failed: bool = False
    error: str = ""


def mpc_step(scenario: Scenario, states: Sequence, warm: AdmmResult | None = None) -> MPCStep:
    """Solve the coordination program from ``states`` and return first controls."""
    prog = build_coordination_program(scenario, states)
    agents, T = scenario.agents, scenario.horizon
    sh = prog.sheaf
    if warm is not None and scenario.warm_start != "none":
        z0 = sh.cochain0([_shift(b, a.n, a.d, T) for a, b in zip(agents, warm.z.blocks())])
        # the scaled dual lives on the coupled terminal coordinates, so it is not shifted
        y0 = sh.cochain0(warm.y.blocks()) if scenario.warm_start == "primal_dual" else sh.zeros0()
    else:
        # cold start: every agent coasts with zero control
        z0 = sh.cochain0([o.w0 for o in prog.objectives])
        y0 = sh.zeros0()
    try:
        res = admm_solve(prog, scenario.admm, z0, y0)
    except Exception as exc:  # recorded; zero controls returned
        log.error("MPC solve failed: %s", exc)
        return MPCStep([np.zeros(a.d) for a in agents], None, True, str(exc))
    controls = []
    for a, obj, b in zip(agents, prog.objectives, res.z.blocks()):
        u1 = obj.controls(b)[: a.d]
        controls.append(np.clip(u1, a.u_lo, a.u_hi))
    return MPCStep(controls, res)


@dataclass
class StepRecord:
    step: int
    states: list[np.ndarray]
    controls: list[np.ndarray] | None
    metrics: dict[str, float]
    admm_iterations: int = 0
    admm_status: str = ""
    admm_primal: float = float("nan")
    result: AdmmResult | None = field(default=None, repr=False)


@dataclass
class TrajectoryLog:
    scenario: str
    seed: int
    records: list[StepRecord] = field(default_factory=list)
    failed: bool = False
    error: str = ""

    @property
    def final_metrics(self) -> dict[str, float]:
        return self.records[-1].metrics if self.records else {}

    def metric_series(self, name: str) -> np.ndarray:
        return np.array([r.metrics[name] for r in self.records])

    def positions(self, agent: int) -> np.ndarray:
        d = len(self.records[0].states[agent]) // 2
        return np.array([r.states[agent][:d] for r in self.records])


def _lift3(p: np.ndarray) -> np.ndarray:
    out = np.zeros(max(3, p.size))
    out[: p.size] = p
    return out


def coordination_metrics(scenario: Scenario, states: Sequence) -> dict[str, float]:
    """Coordination metrics recomputable from logged states alone.

    x_spread and velocity_spread are max-minus-min across agents (per
    component, maximized); formation_error is the largest ``|y_e - b_e|`` over
    displacement goals; distance_error is the largest relative deviation from
    fixed-distance goals.
    """
    agents = scenario.agents
    states = [np.asarray(s, dtype=float) for s in states]
    pos = [s[: a.d] for a, s in zip(agents, states)]
    vel = [s[a.d :] for a, s in zip(agents, states)]
    out: dict[str, float] = {}
    out["x_spread"] = float(max(p[0] for p in pos) - min(p[0] for p in pos))
    V = np.array([_lift3(v) for v in vel])
    out["velocity_spread"] = float(np.max(V.max(axis=0) - V.min(axis=0)))
    P = np.array([_lift3(p) for p in pos])
    if len(agents) > 1:
        dists = [np.linalg.norm(P[i] - P[j]) for i in range(len(P)) for j in range(i + 1, len(P))]
        out["min_pair_dist"] = float(min(dists))
        out["max_pair_dist"] = float(max(dists))
    form, dist, pot = [], [], 0.0
    for e in scenario.edges:
        Fi, Fj = e.maps(agents)
        y = Fi @ states[e.i] - Fj @ states[e.j]
        pot += e.potential.value(y)
        parts = e.potential.parts if isinstance(e.potential, SplitPotential) else ((tuple(range(y.size)), e.potential),)
        for idx, p in parts:
            yi = y[list(idx)]
            if p.kind == "displacement":
                # position-like coordinates only: velocity targets are consensus goals
                form.append(float(np.linalg.norm(yi[: _position_count(e, agents)] - p.b[: _position_count(e, agents)])))
            elif p.kind.startswith("fixed_distance"):
                dist.append(abs(float(np.linalg.norm(yi)) - p.r) / p.r)
    if form:
        out["formation_error"] = max(form)
    if dist:
        out["distance_error"] = max(dist)
    out["potential"] = float(pot)
    return out


def _position_count(e: CoordinationEdge, agents) -> int:
    d = agents[e.i].d
    if e.sel_i == "full_state":
        return d
    return e.potential.dim


def run_mpc(scenario: Scenario, steps: int | None = None) -> TrajectoryLog:
    """Receding-horizon loop: solve, apply first controls, propagate."""
    steps = scenario.mpc_steps if steps is None else steps
    states = scenario.draw_initial_states()
    systems = [scenario.system(k) for k in range(len(scenario.agents))]
    tlog = TrajectoryLog(scenario.name, scenario.seed)
    warm = None
    for s in range(steps):
        out = mpc_step(scenario, states, warm)
        # a failed solve applies nothing, so its record carries no controls
        controls = None if out.failed else out.controls
        rec = StepRecord(s, [x.copy() for x in states], controls, coordination_metrics(scenario, states))
        if out.result is not None:
            rep = out.result.report
            rec.admm_iterations, rec.admm_status, rec.admm_primal = rep.iterations, rep.status, rep.final_primal
            rec.result = out.result
            warm = out.result
        tlog.records.append(rec)
        if out.failed:
            tlog.failed, tlog.error = True, out.error
            return tlog
        states = [sys_.step(x, u) for sys_, x, u in zip(systems, states, out.controls)]
    tlog.records.append(StepRecord(steps, [x.copy() for x in states], None, coordination_metrics(scenario, states)))
    return tlog


def build_multidomain_scenario(config: dict) -> Scenario:
    """Heterogeneous UAV / USV / UUV team.

    ``config`` keys: ``n_uav``, ``n_usv``, ``n_uuv`` (team sizes), ``r_uav_usv``,
    ``r_uuv_usv``, ``r_uuv``, ``usv_offsets`` (planar displacement targets for
    consecutive USV pairs), ``uav_altitude``, plus optional ``horizon``, ``dt``,
    ``mpc_steps``, ``seed``, ``admm`` (an :class:`AdmmParams`).

    Agents are ordered UAVs, UUVs, USVs.  UAVs form a complete graph (velocity
    consensus) and hold altitude through a stage cost; UUVs a complete graph
    (velocity consensus plus fixed distance); USVs a path with displacement
    goals.  UAV k and UUV k link to USV ``k mod n_usv`` through the planar lift.
    """
    n_uav, n_usv, n_uuv = (int(config.get(k, 0)) for k in ("n_uav", "n_usv", "n_uuv"))
    if n_uav <= 0 or n_usv <= 0 or n_uuv <= 0:
        raise ValueError("multidomain scenario needs non-empty UAV, USV and UUV teams")
    r_air = float(config.get("r_uav_usv", 3.0))
    r_sea = float(config.get("r_uuv_usv", 3.0))
    r_uuv = float(config.get("r_uuv", 2.0))
    h = float(config.get("uav_altitude", 2.0))
    offsets = config.get("usv_offsets") or [[2.0, 0.0]] * (n_usv - 1)
    if abs(h) >= r_air:
        log.warning("UAV altitude %g is not below the UAV-USV distance %g; the two goals conflict", h, r_air)
    lo, hi = -2.0, 2.0

    agents: list[AgentSpec] = []
    uav = list(range(0, n_uav))
    uuv = list(range(n_uav, n_uav + n_uuv))
    usv = list(range(n_uav + n_uuv, n_uav + n_uuv + n_usv))
    # control effort sum |u|^2 is 1/2 u^T (2I) u
    for k in uav:
        Q = np.zeros((6, 6))
        Q[2, 2] = float(config.get("altitude_weight", 1.0))
        agents.append(AgentSpec(3, Q, 2.0 * np.eye(3), np.array([0, 0, h, 0, 0, 0.0]),
                                np.full(3, lo), np.full(3, hi), f"uav{k}"))
    for k in uuv:
        agents.append(AgentSpec(3, np.zeros((6, 6)), 2.0 * np.eye(3), np.zeros(6),
                                np.full(3, lo), np.full(3, hi), f"uuv{k - n_uav}"))
    for k in usv:
        agents.append(AgentSpec(2, np.zeros((4, 4)), 2.0 * np.eye(2), np.zeros(4),
                                np.full(2, lo), np.full(2, hi), f"usv{k - n_uav - n_uuv}"))

    edges: list[CoordinationEdge] = []
    vel_consensus = split(6, [((3, 4, 5), EdgePotential.quadratic(3))])
    for a in range(len(uav)):
        for b in range(a + 1, len(uav)):
            edges.append(CoordinationEdge(uav[a], uav[b], "full_state", "full_state", vel_consensus))
    for a in range(len(uuv)):
        for b in range(a + 1, len(uuv)):
            pot = split(6, [((0, 1, 2), EdgePotential.fixed_distance_sq(3, r_uuv, scale=0.5)),
                            ((3, 4, 5), EdgePotential.quadratic(3))])
            edges.append(CoordinationEdge(uuv[a], uuv[b], "full_state", "full_state", pot))
    for a in range(len(usv) - 1):
        off = np.asarray(offsets[a], dtype=float)
        edges.append(CoordinationEdge(usv[a], usv[a + 1], "position", "position", EdgePotential.displacement(off)))
    for k, a in enumerate(uav):
        edges.append(CoordinationEdge(a, usv[k % n_usv], "position", "planar_lift",
                                      EdgePotential.fixed_distance_norm(3, r_air)))
    for k, a in enumerate(uuv):
        edges.append(CoordinationEdge(a, usv[k % n_usv], "position", "planar_lift",
                                      EdgePotential.fixed_distance_sq(3, r_sea, scale=0.5)))
    edges.sort(key=lambda e: (e.i, e.j))

    return Scenario(
        name=str(config.get("name", "multidomain")),
        kind="multidomain",
        agents=agents,
        edges=edges,
        horizon=int(config.get("horizon", 10)),
        dt=float(config.get("dt", 0.1)),
        admm=config.get("admm", AdmmParams(K=10)),
        mpc_steps=int(config.get("mpc_steps", 50)),
        seed=int(config.get("seed", 0)),
    )
