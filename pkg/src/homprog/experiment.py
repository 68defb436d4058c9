"""Deterministic experiment runs: CSV exports, run summary, static plots.

Output files (all floats written with 17 significant digits):

- ``trajectory.csv``: step, agent, p0.., v0.., u0.. (one row per agent per
  logged step; agents with fewer spatial dimensions leave trailing cells
  empty; the final state row has empty controls)
- ``metrics.csv``: step, metric_name, value
- ``solver.csv``: step, iter, primal_res, dual_res, objective, inner_iters,
  inner_converged
- ``summary.json``: :class:`RunSummary` plus the fully resolved config
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, to_dict, to_scenario
from .control import TrajectoryLog, run_mpc

__all__ = [
    "RunSummary",
    "OUTPUT_ENV",
    "resolve_output_dir",
    "run_experiment",
    "write_trajectory_csv",
    "write_metrics_csv",
    "write_solver_csv",
    "read_trajectory_csv",
    "emit_plot",
]

log = logging.getLogger(__name__)

OUTPUT_ENV = "HOMPROG_OUTPUT_DIR"


def _f(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunSummary:
    scenario: str
    kind: str
    seed: int
    steps_requested: int
    steps_executed: int
    status: str
    final_metrics: dict[str, float]
    thresholds: dict[str, float]
    thresholds_met: dict[str, bool]
    admm_iterations_total: int
    wall_clock_s: float
    defaults_applied: list[str]
    error: str = ""
    files: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def resolve_output_dir(cli_value: str | None, cfg: ScenarioConfig | None = None) -> Path:
    """CLI flag, then the environment variable, then the config, then ``./runs/<name>``."""
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / (cfg.name if cfg is not None else "run")
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("runs") / (cfg.name if cfg is not None else "run")


def _dims(tlog: TrajectoryLog) -> int:
    return max(len(s) // 2 for s in tlog.records[0].states)


def write_trajectory_csv(tlog: TrajectoryLog, path) -> None:
    D = _dims(tlog)
    header = ["step", "agent"] + [f"p{k}" for k in range(D)] + [f"v{k}" for k in range(D)] + [f"u{k}" for k in range(D)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in tlog.records:
            for a, x in enumerate(rec.states):
                d = len(x) // 2
                pad = [""] * (D - d)
                p = [_f(v) for v in x[:d]] + pad
                v = [_f(v) for v in x[d:]] + pad
                if rec.controls is None:
                    u = [""] * D
                else:
                    u = [_f(c) for c in rec.controls[a]] + pad
                w.writerow([rec.step, a, *p, *v, *u])


def write_metrics_csv(tlog: TrajectoryLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "metric_name", "value"])
        for rec in tlog.records:
            for name in sorted(rec.metrics):
                w.writerow([rec.step, name, _f(rec.metrics[name])])


def write_solver_csv(tlog: TrajectoryLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "iter", "primal_res", "dual_res", "objective", "inner_iters", "inner_converged"])
        for rec in tlog.records:
            if rec.result is None:
                continue
            for it in rec.result.report.iterates:
                w.writerow([rec.step, it.iter, _f(it.primal_res), _f(it.dual_res), _f(it.objective),
                            it.inner_iters, int(bool(it.inner_converged))])


def run_experiment(cfg: ScenarioConfig, out_dir, seed: int | None = None, steps: int | None = None) -> RunSummary:
    """Run one scenario and write all outputs to ``out_dir``.

    Files are written even when a solve fails mid-run; the summary status is
    then ``"failed"`` and callers should exit nonzero.
    """
    cfg = cfg.with_overrides(seed=seed, steps=steps)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = to_scenario(cfg)
    t0 = time.perf_counter()
    try:
        tlog = run_mpc(scenario, cfg.mpc_steps)
    except Exception as exc:  # config-valid but numerically broken runs still report
        log.exception("run failed")
        tlog = TrajectoryLog(scenario.name, scenario.seed, failed=True, error=str(exc))
    wall = time.perf_counter() - t0

    files = {}
    if tlog.records:
        for name, writer in (("trajectory", write_trajectory_csv), ("metrics", write_metrics_csv),
                             ("solver", write_solver_csv)):
            path = out / f"{name}.csv"
            writer(tlog, path)
            files[name] = str(path)

    final = tlog.final_metrics
    thresholds = dict(cfg.thresholds)
    met = {k: bool(k in final and final[k] <= v) for k, v in thresholds.items()}
    executed = sum(1 for r in tlog.records if r.controls is not None)
    summary = RunSummary(
        scenario=cfg.name,
        kind=cfg.kind,
        seed=cfg.seed,
        steps_requested=cfg.mpc_steps,
        steps_executed=executed,
        status="failed" if tlog.failed else "ok",
        final_metrics={k: float(v) for k, v in sorted(final.items())},
        thresholds=thresholds,
        thresholds_met=met,
        admm_iterations_total=int(sum(r.admm_iterations for r in tlog.records)),
        wall_clock_s=wall,
        defaults_applied=list(cfg.defaults),
        error=tlog.error,
        files=files,
    )
    path = out / "summary.json"
    payload = asdict(summary)
    payload["config"] = to_dict(cfg)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    summary.files["summary"] = str(path)
    return summary


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def read_trajectory_csv(path) -> dict[int, np.ndarray]:
    """Positions per agent, ``{agent: array (steps x d)}``, from a trajectory CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if header[:2] != ["step", "agent"]:
        raise ValueError(f"{path}: not a trajectory CSV (header {header[:2]})")
    pcols = [k for k, h in enumerate(header) if h.startswith("p") and h[1:].isdigit()]
    if not pcols:
        raise ValueError(f"{path}: no position columns")
    paths: dict[int, list] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            agent = int(row[1])
            p = [float(row[k]) for k in pcols if row[k] != ""]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        paths.setdefault(agent, []).append(p)
    if not paths:
        raise ValueError(f"{path}: no trajectory rows")
    return {a: np.array(v) for a, v in sorted(paths.items())}


def emit_plot(csv_path, out_path, annotate_distances: bool | None = None) -> Path:
    """Render 2-D agent paths with start/end markers to a vector image (SVG/PDF).

    Final pairwise distances are annotated when ``annotate_distances`` is
    true, or by default when every agent is planar and there are at most 4.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = read_trajectory_csv(csv_path)
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(5, 5))
    for a, P in paths.items():
        xy = P[:, :2] if P.shape[1] >= 2 else np.column_stack([P[:, 0], np.zeros(len(P))])
        (line,) = ax.plot(xy[:, 0], xy[:, 1], lw=1.2, label=f"agent {a}")
        ax.plot(*xy[0], "o", color=line.get_color(), mfc="none")
        ax.plot(*xy[-1], "s", color=line.get_color())
    if annotate_distances is None:
        annotate_distances = len(paths) <= 4
    if annotate_distances:
        ends = {a: P[-1] for a, P in paths.items()}
        keys = sorted(ends)
        for i, a in enumerate(keys):
            for b in keys[i + 1 :]:
                pa, pb = ends[a], ends[b]
                n = max(pa.size, pb.size)
                da = np.pad(pa, (0, n - pa.size))
                db = np.pad(pb, (0, n - pb.size))
                mid = 0.5 * (da[:2] + db[:2]) if n >= 2 else np.array([0.5 * (da[0] + db[0]), 0.0])
                ax.plot([da[0], db[0]], [da[1] if n > 1 else 0, db[1] if n > 1 else 0], ":", color="0.5", lw=0.8)
                ax.annotate(f"{np.linalg.norm(da - db):.3f}", mid, fontsize=7, color="0.3")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
