"""Versioned JSON scenario configuration.

A config is parsed into plain frozen dataclasses holding canonical values
(full matrices, per-dimension bounds), so ``parse_config(serialize(c)) == c``.
Unknown keys are rejected, and every error names the offending field path.
Defaults filled in during parsing are listed in ``ScenarioConfig.defaults``.

Minimal example::

    {"schema_version": 1, "kind": "consensus", "mpc_steps": 100,
     "agents": [{"Q": [0, 1, 0, 1], "x_ref": [0, -2, 0, 0]}, ...],
     "edges": [{"i": 0, "j": 1, "sel_i": "x_position", "sel_j": "x_position",
                "potential": {"kind": "quadratic"}}, ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .control import (
    SELECTORS,
    WARM_START_MODES,
    AgentSpec,
    CoordinationEdge,
    Scenario,
    build_multidomain_scenario,
    selector,
)
from .potentials import KINDS, EdgePotential, SplitPotential
from .dynamics import DIFFUSION_METHODS
from .solver import AdmmParams

__all__ = [
    "SCHEMA_VERSION",
    "SCENARIO_KINDS",
    "ConfigError",
    "PotentialConfig",
    "PartConfig",
    "EdgeConfig",
    "AgentConfig",
    "InitialStateConfig",
    "AdmmConfig",
    "MultidomainConfig",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "serialize",
    "to_dict",
    "build_potential",
    "to_scenario",
]

SCHEMA_VERSION = 1
SCENARIO_KINDS = ("consensus", "stationary_formation", "flocking", "moving_formation", "multidomain")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


# ---------------------------------------------------------------------------
# dataclasses


@dataclass(frozen=True)
class PotentialConfig:
    kind: str
    b: tuple[float, ...] | None = None
    r: float | None = None
    r_squared: float | None = None
    A: tuple[tuple[float, ...], ...] | None = None
    scale: float = 1.0
    parts: tuple["PartConfig", ...] | None = None


@dataclass(frozen=True)
class PartConfig:
    indices: tuple[int, ...]
    potential: PotentialConfig


@dataclass(frozen=True)
class EdgeConfig:
    i: int
    j: int
    potential: PotentialConfig
    sel_i: str = "full_state"
    sel_j: str = "full_state"


@dataclass(frozen=True)
class AgentConfig:
    d: int
    Q: tuple[tuple[float, ...], ...]
    R: tuple[tuple[float, ...], ...]
    x_ref: tuple[float, ...]
    u_lo: tuple[float, ...]
    u_hi: tuple[float, ...]
    name: str = ""


@dataclass(frozen=True)
class InitialStateConfig:
    mode: str = "uniform"
    low: float = -5.0
    high: float = 5.0
    states: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    alpha: float = 1.0
    eps1: float = 1e-4
    eps2: float = 1e-6
    K: int = 10
    gamma: float = 1.0
    mode: str = "auto"
    diffusion_max_iters: int = 100_000
    eps_dual: float | None = None
    eps2_start: float | None = None
    diffusion_method: str = "euler"

    def params(self) -> AdmmParams:
        return AdmmParams(
            rho=self.rho, alpha=self.alpha, eps1=self.eps1, eps2=self.eps2, K=self.K,
            diffusion_max_iters=self.diffusion_max_iters, mode=self.mode, gamma=self.gamma,
            eps_dual=self.eps_dual, eps2_start=self.eps2_start, diffusion_method=self.diffusion_method,
        )


@dataclass(frozen=True)
class MultidomainConfig:
    n_uav: int
    n_usv: int
    n_uuv: int
    r_uav_usv: float = 3.0
    r_uuv_usv: float = 3.0
    r_uuv: float = 2.0
    uav_altitude: float = 2.0
    altitude_weight: float = 1.0
    usv_offsets: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    name: str
    mpc_steps: int
    seed: int = 0
    dt: float = 0.1
    horizon: int = 10
    warm_start: str = "none"
    initial_state: InitialStateConfig = InitialStateConfig()
    admm: AdmmConfig = AdmmConfig()
    agents: tuple[AgentConfig, ...] = ()
    edges: tuple[EdgeConfig, ...] = ()
    multidomain: MultidomainConfig | None = None
    thresholds: tuple[tuple[str, float], ...] = ()
    output_dir: str | None = None
    schema_version: int = SCHEMA_VERSION
    defaults: tuple[str, ...] = field(default=(), compare=False)

    def with_overrides(self, seed: int | None = None, steps: int | None = None) -> "ScenarioConfig":
        from dataclasses import replace

        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if steps is not None:
            out = replace(out, mpc_steps=int(steps))
        return out


# ---------------------------------------------------------------------------
# parsing helpers


class _Reader:
    """Walks one JSON object, tracking consumed keys and defaults."""

    def __init__(self, obj: Any, path: str, defaults: list[str]):
        if not isinstance(obj, dict):
            raise ConfigError(path, "expected an object")
        self.obj, self.path, self.defaults = obj, path, defaults
        self.used: set[str] = set()

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.obj

    def get(self, key: str, conv, default=..., echo: bool = True):
        self.used.add(key)
        if key not in self.obj:
            if default is ...:
                raise ConfigError(self.sub(key), "missing required field")
            if echo:
                self.defaults.append(self.sub(key))
            return default
        return conv(self.obj[key], self.sub(key))

    def finish(self):
        extra = sorted(set(self.obj) - self.used)
        if extra:
            raise ConfigError(self.sub(extra[0]), f"unknown field (allowed: {sorted(self.used)})")


def _int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return v


def _float(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _pos(v, path):
    v = _float(v, path)
    if v <= 0:
        raise ConfigError(path, "must be positive")
    return v


def _str(v, path):
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    return v


def _opt(conv):
    return lambda v, path: None if v is None else conv(v, path)


def _vec(v, path, n=None):
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of numbers")
    out = tuple(_float(x, f"{path}[{k}]") for k, x in enumerate(v))
    if n is not None and len(out) != n:
        raise ConfigError(path, f"expected length {n}, got {len(out)}")
    return out


def _indices(v, path):
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a non-empty list of indices")
    return tuple(_int(x, f"{path}[{k}]", 0) for k, x in enumerate(v))


def _matrix(v, path, n):
    """Square ``n x n`` matrix from a matrix, a diagonal list, or a scalar."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return tuple(tuple(float(v) if r == c else 0.0 for c in range(n)) for r in range(n))
    if isinstance(v, list) and all(not isinstance(x, list) for x in v):
        diag = _vec(v, path, n)
        return tuple(tuple(diag[r] if r == c else 0.0 for c in range(n)) for r in range(n))
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(path, f"expected a {n}x{n} matrix, a length-{n} diagonal, or a scalar")
    return tuple(_vec(row, f"{path}[{k}]", n) for k, row in enumerate(v))


def _bounds(v, path, d):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(path, "expected [lo, hi]")
    lo, hi = ((tuple([_float(x, f"{path}[{k}]")] * d) if not isinstance(x, list) else _vec(x, f"{path}[{k}]", d))
              for k, x in enumerate(v))
    if any(a > b for a, b in zip(lo, hi)):
        raise ConfigError(path, "infeasible bounds: lo > hi")
    return lo, hi


def _choice(options):
    def conv(v, path):
        v = _str(v, path)
        if v not in options:
            raise ConfigError(path, f"must be one of {list(options)}, got {v!r}")
        return v

    return conv


def _parse_potential(obj, path, defaults) -> PotentialConfig:
    r = _Reader(obj, path, defaults)
    kind = r.get("kind", _choice(KINDS + ("split",)))
    kw: dict[str, Any] = {"kind": kind}
    if kind != "split":
        kw["scale"] = r.get("scale", _pos, 1.0, echo=False)
    if kind == "displacement":
        kw["b"] = r.get("b", _vec)
    elif kind == "matrix_weighted":
        A = r.get("A", lambda v, p: v)
        if not isinstance(A, list) or not A:
            raise ConfigError(r.sub("A"), "expected a square matrix")
        kw["A"] = _matrix(A, r.sub("A"), len(A))
    elif kind.startswith("fixed_distance"):
        has_r, has_r2 = r.has("r"), r.has("r_squared")
        if has_r == has_r2:
            raise ConfigError(path, "give exactly one of r or r_squared")
        if has_r:
            kw["r"] = r.get("r", _pos)
        else:
            kw["r_squared"] = r.get("r_squared", _pos)
    elif kind == "split":
        raw = r.get("parts", lambda v, p: v)
        if not isinstance(raw, list) or not raw:
            raise ConfigError(r.sub("parts"), "expected a non-empty list")
        parts = []
        for k, item in enumerate(raw):
            pp = f"{r.sub('parts')}[{k}]"
            pr = _Reader(item, pp, defaults)
            idx = pr.get("indices", _indices)
            pot = pr.get("potential", lambda v, p: _parse_potential(v, p, defaults))
            if pot.kind == "split":
                raise ConfigError(f"{pp}.potential", "split potentials cannot nest")
            pr.finish()
            parts.append(PartConfig(idx, pot))
        kw["parts"] = tuple(parts)
    r.finish()
    return PotentialConfig(**kw)


def _parse_agent(obj, path, defaults) -> AgentConfig:
    r = _Reader(obj, path, defaults)
    name = r.get("name", _str, "", echo=False)
    d = r.get("d", lambda v, p: _int(v, p, 1), 2)
    n = 2 * d
    Q = r.get("Q", lambda v, p: _matrix(v, p, n), _matrix(0.0, "", n))
    R = r.get("R", lambda v, p: _matrix(v, p, d), _matrix(0.1, "", d))
    x_ref = r.get("x_ref", lambda v, p: _vec(v, p, n), (0.0,) * n)
    lo, hi = r.get("u_bounds", lambda v, p: _bounds(v, p, d), ((-2.0,) * d, (2.0,) * d))
    r.finish()
    for nm, M in (("Q", Q), ("R", R)):
        if np.linalg.eigvalsh(0.5 * (np.array(M) + np.array(M).T)).min() < -1e-12:
            raise ConfigError(r.sub(nm), "stage-cost weight must be positive semidefinite")
    return AgentConfig(d, Q, R, x_ref, lo, hi, name)


def _parse_edge(obj, path, defaults, agents) -> EdgeConfig:
    r = _Reader(obj, path, defaults)
    i = r.get("i", lambda v, p: _int(v, p, 0))
    j = r.get("j", lambda v, p: _int(v, p, 0))
    sel_i = r.get("sel_i", _choice(SELECTORS), "full_state")
    sel_j = r.get("sel_j", _choice(SELECTORS), "full_state")
    pot = r.get("potential", lambda v, p: _parse_potential(v, p, defaults))
    r.finish()
    if not (i < j < len(agents)):
        raise ConfigError(path, f"edge needs 0 <= i < j < {len(agents)}, got ({i}, {j})")
    try:
        Fi = selector(sel_i, agents[i].d)
        Fj = selector(sel_j, agents[j].d)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    if Fi.shape[0] != Fj.shape[0]:
        raise ConfigError(path, f"selectors give edge stalks of sizes {Fi.shape[0]} and {Fj.shape[0]}")
    try:
        build_potential(pot, Fi.shape[0])
    except ValueError as exc:
        raise ConfigError(f"{path}.potential", str(exc)) from None
    return EdgeConfig(i, j, pot, sel_i, sel_j)


def _parse_initial(obj, path, defaults, n_agents) -> InitialStateConfig:
    r = _Reader(obj, path, defaults)
    mode = r.get("mode", _choice(("uniform", "fixed")))
    if mode == "uniform":
        low = r.get("low", _float, -5.0)
        high = r.get("high", _float, 5.0)
        r.finish()
        if low > high:
            raise ConfigError(path, "low > high")
        return InitialStateConfig("uniform", low, high)
    raw = r.get("states", lambda v, p: v)
    r.finish()
    if not isinstance(raw, list) or len(raw) != n_agents:
        raise ConfigError(f"{path}.states", f"expected one state per agent ({n_agents})")
    return InitialStateConfig("fixed", states=tuple(_vec(s, f"{path}.states[{k}]") for k, s in enumerate(raw)))


def _parse_admm(obj, path, defaults) -> AdmmConfig:
    r = _Reader(obj, path, defaults)
    out = AdmmConfig(
        rho=r.get("rho", _pos, 1.0),
        alpha=r.get("alpha", _pos, 1.0),
        eps1=r.get("eps1", _pos, 1e-4),
        eps2=r.get("eps2", _pos, 1e-6),
        K=r.get("K", lambda v, p: _int(v, p, 1), 10),
        gamma=r.get("gamma", _pos, 1.0),
        mode=r.get("mode", _choice(("auto", "projection", "relaxed")), "auto"),
        diffusion_max_iters=r.get("diffusion_max_iters", lambda v, p: _int(v, p, 1), 100_000),
        eps_dual=r.get("eps_dual", _opt(_pos), None),
        eps2_start=r.get("eps2_start", _opt(_pos), None),
        diffusion_method=r.get("diffusion_method", _choice(DIFFUSION_METHODS), "euler"),
    )
    r.finish()
    return out


def _parse_multidomain(obj, path, defaults) -> MultidomainConfig:
    r = _Reader(obj, path, defaults)
    n = {k: r.get(k, lambda v, p: _int(v, p, 1)) for k in ("n_uav", "n_usv", "n_uuv")}
    out = MultidomainConfig(
        **n,
        r_uav_usv=r.get("r_uav_usv", _pos, 3.0),
        r_uuv_usv=r.get("r_uuv_usv", _pos, 3.0),
        r_uuv=r.get("r_uuv", _pos, 2.0),
        uav_altitude=r.get("uav_altitude", _float, 2.0),
        altitude_weight=r.get("altitude_weight", lambda v, p: _float(v, p), 1.0),
        usv_offsets=r.get("usv_offsets", _opt(lambda v, p: tuple(_vec(x, f"{p}[{k}]", 2) for k, x in enumerate(v))), None),
    )
    r.finish()
    if out.usv_offsets is not None and len(out.usv_offsets) != out.n_usv - 1:
        raise ConfigError(f"{path}.usv_offsets", f"expected {out.n_usv - 1} offsets (one per consecutive USV pair)")
    return out


def _thresholds(v, path):
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object of metric -> maximum")
    return tuple(sorted((str(k), _float(x, f"{path}.{k}")) for k, x in v.items()))


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario config."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    defaults: list[str] = []
    r = _Reader(obj, "", defaults)
    version = r.get("schema_version", lambda v, p: _int(v, p))
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version} (this build reads {SCHEMA_VERSION})")
    kind = r.get("kind", _choice(SCENARIO_KINDS))
    name = r.get("name", _str, kind)
    mpc_steps = r.get("mpc_steps", lambda v, p: _int(v, p, 1))
    seed = r.get("seed", lambda v, p: _int(v, p, 0), 0)
    dt = r.get("dt", _pos, 0.1)
    horizon = r.get("horizon", lambda v, p: _int(v, p, 2), 10)
    warm = r.get("warm_start", _choice(WARM_START_MODES), "none")
    admm = r.get("admm", lambda v, p: _parse_admm(v, p, defaults), None)
    if admm is None:
        admm = AdmmConfig()
        defaults.append("admm")
    thresholds = r.get("thresholds", _thresholds, (), echo=False)
    output_dir = r.get("output_dir", _opt(_str), None, echo=False)

    agents: tuple[AgentConfig, ...] = ()
    edges: tuple[EdgeConfig, ...] = ()
    md = None
    if kind == "multidomain":
        md = r.get("multidomain", lambda v, p: _parse_multidomain(v, p, defaults))
        for forbidden in ("agents", "edges"):
            if r.has(forbidden):
                raise ConfigError(forbidden, "multidomain scenarios are generated from the 'multidomain' block")
        n_agents = md.n_uav + md.n_usv + md.n_uuv
    else:
        raw_agents = r.get("agents", lambda v, p: v)
        if not isinstance(raw_agents, list) or not raw_agents:
            raise ConfigError("agents", "expected a non-empty list")
        agents = tuple(_parse_agent(a, f"agents[{k}]", defaults) for k, a in enumerate(raw_agents))
        raw_edges = r.get("edges", lambda v, p: v, [])
        if not isinstance(raw_edges, list):
            raise ConfigError("edges", "expected a list")
        edges = tuple(_parse_edge(e, f"edges[{k}]", defaults, agents) for k, e in enumerate(raw_edges))
        if len({(e.i, e.j) for e in edges}) != len(edges):
            raise ConfigError("edges", "duplicate edge")
        n_agents = len(agents)
    init = r.get("initial_state", lambda v, p: _parse_initial(v, p, defaults, n_agents), None)
    if init is None:
        init = InitialStateConfig()
        defaults.append("initial_state")
    r.finish()
    if init.mode == "fixed" and kind != "multidomain":
        for k, (s, a) in enumerate(zip(init.states, agents)):
            if len(s) != 2 * a.d:
                raise ConfigError(f"initial_state.states[{k}]", f"expected length {2 * a.d}")
    return ScenarioConfig(
        kind=kind, name=name, mpc_steps=mpc_steps, seed=seed, dt=dt, horizon=horizon, warm_start=warm,
        initial_state=init, admm=admm, agents=agents, edges=edges, multidomain=md,
        thresholds=thresholds, output_dir=output_dir, defaults=tuple(defaults),
    )


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# serialization


def _pot_dict(p: PotentialConfig) -> dict:
    d: dict[str, Any] = {"kind": p.kind}
    if p.b is not None:
        d["b"] = list(p.b)
    if p.r is not None:
        d["r"] = p.r
    if p.r_squared is not None:
        d["r_squared"] = p.r_squared
    if p.A is not None:
        d["A"] = [list(row) for row in p.A]
    if p.parts is not None:
        d["parts"] = [{"indices": list(q.indices), "potential": _pot_dict(q.potential)} for q in p.parts]
    elif p.scale != 1.0:
        d["scale"] = p.scale
    return d


def to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical JSON-ready form with every default written out."""
    out: dict[str, Any] = {
        "schema_version": cfg.schema_version,
        "kind": cfg.kind,
        "name": cfg.name,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "mpc_steps": cfg.mpc_steps,
        "warm_start": cfg.warm_start,
    }
    init = cfg.initial_state
    if init.mode == "uniform":
        out["initial_state"] = {"mode": "uniform", "low": init.low, "high": init.high}
    else:
        out["initial_state"] = {"mode": "fixed", "states": [list(s) for s in init.states]}
    a = cfg.admm
    out["admm"] = {
        "rho": a.rho, "alpha": a.alpha, "eps1": a.eps1, "eps2": a.eps2, "K": a.K, "gamma": a.gamma,
        "mode": a.mode, "diffusion_max_iters": a.diffusion_max_iters, "eps_dual": a.eps_dual,
        "eps2_start": a.eps2_start, "diffusion_method": a.diffusion_method,
    }
    if cfg.multidomain is not None:
        m = cfg.multidomain
        out["multidomain"] = {
            "n_uav": m.n_uav, "n_usv": m.n_usv, "n_uuv": m.n_uuv, "r_uav_usv": m.r_uav_usv,
            "r_uuv_usv": m.r_uuv_usv, "r_uuv": m.r_uuv, "uav_altitude": m.uav_altitude,
            "altitude_weight": m.altitude_weight,
            "usv_offsets": None if m.usv_offsets is None else [list(o) for o in m.usv_offsets],
        }
    else:
        out["agents"] = [
            {"name": ag.name, "d": ag.d, "Q": [list(r) for r in ag.Q], "R": [list(r) for r in ag.R],
             "x_ref": list(ag.x_ref), "u_bounds": [list(ag.u_lo), list(ag.u_hi)]}
            for ag in cfg.agents
        ]
        out["edges"] = [
            {"i": e.i, "j": e.j, "sel_i": e.sel_i, "sel_j": e.sel_j, "potential": _pot_dict(e.potential)}
            for e in cfg.edges
        ]
    if cfg.thresholds:
        out["thresholds"] = dict(cfg.thresholds)
    if cfg.output_dir is not None:
        out["output_dir"] = cfg.output_dir
    return out


def serialize(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"


# ---------------------------------------------------------------------------
# building


def build_potential(p: PotentialConfig, dim: int) -> EdgePotential | SplitPotential:
    """Instantiate a potential on an edge stalk of size ``dim``."""
    if p.kind == "split":
        parts = []
        for q in p.parts:
            parts.append((q.indices, build_potential(q.potential, len(q.indices))))
        return SplitPotential(dim, tuple(parts))
    if p.kind == "displacement":
        if len(p.b) != dim:
            raise ValueError(f"displacement target has length {len(p.b)}, edge stalk has {dim}")
        return EdgePotential("displacement", dim, b=np.array(p.b), scale=p.scale)
    if p.kind == "matrix_weighted":
        if len(p.A) != dim:
            raise ValueError(f"weight matrix is {len(p.A)}x{len(p.A)}, edge stalk has {dim}")
        return EdgePotential("matrix_weighted", dim, A=np.array(p.A), scale=p.scale)
    if p.kind.startswith("fixed_distance"):
        r = p.r if p.r is not None else math.sqrt(p.r_squared)
        return EdgePotential(p.kind, dim, r=r, scale=p.scale)
    return EdgePotential(p.kind, dim, scale=p.scale)


def to_scenario(cfg: ScenarioConfig) -> Scenario:
    """The runnable :class:`Scenario` described by ``cfg``."""
    init = cfg.initial_state
    states = None if init.mode == "uniform" else [np.array(s) for s in init.states]
    if cfg.kind == "multidomain":
        m = cfg.multidomain
        sc = build_multidomain_scenario({
            "name": cfg.name, "n_uav": m.n_uav, "n_usv": m.n_usv, "n_uuv": m.n_uuv,
            "r_uav_usv": m.r_uav_usv, "r_uuv_usv": m.r_uuv_usv, "r_uuv": m.r_uuv,
            "uav_altitude": m.uav_altitude, "altitude_weight": m.altitude_weight,
            "usv_offsets": None if m.usv_offsets is None else [list(o) for o in m.usv_offsets],
            "horizon": cfg.horizon, "dt": cfg.dt, "mpc_steps": cfg.mpc_steps, "seed": cfg.seed,
            "admm": cfg.admm.params(),
        })
        sc.warm_start = cfg.warm_start
        sc.init_low, sc.init_high = init.low, init.high
        if states is not None:
            if [len(s) for s in states] != [a.n for a in sc.agents]:
                raise ConfigError("initial_state.states", "state lengths do not match the generated agents")
            sc.initial_states = states
        return sc
    agents = [
        AgentSpec(a.d, np.array(a.Q), np.array(a.R), np.array(a.x_ref), np.array(a.u_lo), np.array(a.u_hi), a.name)
        for a in cfg.agents
    ]
    edges = []
    for e in cfg.edges:
        dim = selector(e.sel_i, agents[e.i].d).shape[0]
        edges.append(CoordinationEdge(e.i, e.j, e.sel_i, e.sel_j, build_potential(e.potential, dim)))
    return Scenario(
        name=cfg.name, kind=cfg.kind, agents=agents, edges=edges, horizon=cfg.horizon, dt=cfg.dt,
        admm=cfg.admm.params(), mpc_steps=cfg.mpc_steps, seed=cfg.seed, initial_states=states,
        init_low=init.low, init_high=init.high, warm_start=cfg.warm_start,
    )
