"""Seeded experiment pipelines and their on-disk outputs.

Every pipeline takes the validated config dict and a seeded generator and
writes plot-ready CSV/JSON into a directory. Result files contain no
timestamps or absolute paths, so a fixed (config, seed) reproduces them byte
for byte; run metadata lives in ``manifest.json`` only.
"""
from __future__ import annotations

import datetime as _dt
import platform
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import linalg, records
from .advantage import quantum_advantage, train_classical
from .bellman import LearnerConfig, QTable, StateRegistry, advantage, train, value_iteration
from .config import config_hash
from .environment import EnvironmentSpec, Observable, env_from_json
from .noncomm import commutator_subgroup, group_closure, pairwise_report
from .pqc import AgentConfig, CircuitTemplate, PQCPolicy, optimize, train_pqc_agent
from .rng import make_rng

MANIFEST = "manifest.json"
STATE_ORDER_NOTE = "basis index: qubit 0 is the most significant bit"


def _learner_cfg(cfg: dict) -> LearnerConfig:
    return LearnerConfig(**cfg.get("learner", {}))


def _write_qtable(path: Path, q: QTable, env: EnvironmentSpec) -> Path:
    rows = ((k, a, env.actions[a].name, v, advantage(q, k, a)) for k, a, v in q.items())
    return records.write_csv(path, ["state_key", "action_index", "action_name", "q_value", "advantage"], rows)


def _write_registry(path: Path, reg: StateRegistry) -> Path:
    return records.write_json(path, {"note": STATE_ORDER_NOTE, "fid_threshold": reg.fid_threshold,
                                     "states": [s.to_json() for s in reg.reference_states]})


def run_qlearn(cfg, env, rng, out: Path) -> list[Path]:
    res = train(env, _learner_cfg(cfg), rng)
    curve = records.write_csv(out / "learning_curve.csv", ["episode", "discounted_return", "epsilon"],
                              ((i, r, e) for i, (r, e) in enumerate(zip(res.returns, res.epsilons))))
    return [_write_qtable(out / "q_table.csv", res.q, env), curve,
            _write_registry(out / "registry.json", res.registry)]


def run_value_iter(cfg, env, rng, out: Path) -> list[Path]:
    vcfg = cfg.get("value_iter", {})
    lcfg = cfg.get("learner", {})
    reg = StateRegistry(lcfg.get("fid_threshold", 0.99), lcfg.get("registry_cap", 100_000))
    res = value_iteration(env, reg, vcfg.get("tol", 1e-8), vcfg.get("max_sweeps", 100_000))
    sweeps = records.write_csv(out / "sweeps.csv", ["sweep", "delta"], enumerate(res.deltas, start=1))
    return [_write_qtable(out / "q_table.csv", res.q, env), sweeps,
            _write_registry(out / "registry.json", reg)]


def run_pqc_opt(cfg, env, rng, out: Path) -> list[Path]:
    tmpl = CircuitTemplate.from_json(cfg["template"])
    p = cfg["pqc"]
    obs = Observable(linalg.matrix_from_json(p["observable"]))
    theta0 = p.get("theta0")
    if theta0 is None:
        theta0 = rng.uniform(0.0, 2 * np.pi, size=tmpl.num_params)
    res = optimize(tmpl, theta0, obs, p.get("lr", 0.1), p.get("iters", 500))
    trace = records.write_csv(out / "optimizer_trace.csv", ["iter", "cost", "grad_norm"], res.trace)
    result = records.write_json(out / "result.json", {
        "theta_star": [float(x) for x in res.theta], "final_cost": res.final_cost,
        "status": res.status, "iterations": len(res.trace) - 1})
    return [trace, result]


def _agent_cfg(cfg: dict) -> AgentConfig:
    a = dict(cfg.get("agent", {}))
    if a.get("theta0") is not None:
        a["theta0"] = tuple(a["theta0"])
    return AgentConfig(**a)


def run_pqc_agent(cfg, env, rng, out: Path) -> list[Path]:
    tmpl = CircuitTemplate.from_json(cfg["template"])
    res = train_pqc_agent(env, tmpl, _agent_cfg(cfg), rng)
    curve = records.write_csv(out / "reward_curve.csv", ["episode", "discounted_return"], enumerate(res.returns))
    probs = PQCPolicy(tmpl, res.theta, env.n_actions, rng).action_probabilities()
    result = records.write_json(out / "result.json", {
        "theta_star": [float(x) for x in res.theta],
        "final_theta": [float(x) for x in (res.final_theta if res.final_theta is not None else res.theta)],
        "best_estimate": res.best_estimate if np.isfinite(res.best_estimate) else None,
        "action_probabilities": {env.actions[a].name: float(p) for a, p in enumerate(probs)}})
    return [curve, result]


def run_advantage(cfg, env, rng, out: Path) -> list[Path]:
    tmpl = CircuitTemplate.from_json(cfg["template"])
    c_rng, q_rng, e_rng = rng.spawn(3)
    baseline = train_classical(env, _learner_cfg(cfg), c_rng)
    agent = train_pqc_agent(env, tmpl, _agent_cfg(cfg), q_rng)
    bench = cfg["bench"]
    n_eval = bench.get("n_eval_episodes", 200)
    report = quantum_advantage(env, tmpl, agent.theta, baseline, n_eval, e_rng,
                               classical_epsilon=bench.get("classical_epsilon", 0.0))
    body = report.to_json()
    body["theta"] = [float(x) for x in agent.theta]
    rep = records.write_json(out / "advantage_report.json", body)
    summary = records.write_csv(out / "advantage_summary.csv", ["run_id", "e_qq", "e_qc", "a_q", "episodes", "seed"],
                                [(cfg["_run_id"], report.e_qq, report.e_qc, report.a_q, n_eval, cfg["seed"])])
    q_rows = ((k, a, env.actions[a].name, v, advantage(baseline.q_table, k, a)) for k, a, v in baseline.q_table.items())
    qt = records.write_csv(out / "classical_q_table.csv",
                           ["state_key", "action_index", "action_name", "q_value", "advantage"], q_rows)
    return [rep, summary, qt]


def run_noncomm(cfg, env, rng, out: Path) -> list[Path]:
    report = pairwise_report(env.actions, env.num_qubits)
    table = records.write_csv(out / "noncomm.csv",
                              ["i", "j", "name_i", "name_j", "raw_degree", "normalized_degree"], report.rows())
    cap = cfg.get("noncomm", {}).get("cap", 512)
    closure = group_closure([a.full_matrix(env.num_qubits) for a in env.actions], cap, names=env.action_names)
    summary = closure.summary()
    summary["max_degree"] = report.max_degree
    summary["commuting_pairs"] = [list(p) for p in report.commuting_pairs]
    if closure.is_closed:
        summary["commutator_subgroup_size"] = len(commutator_subgroup(closure))
    return [table, records.write_json(out / "closure.json", summary)]


PIPELINES = {
    "qlearn": run_qlearn,
    "value_iter": run_value_iter,
    "pqc_opt": run_pqc_opt,
    "pqc_agent": run_pqc_agent,
    "advantage": run_advantage,
    "noncomm": run_noncomm,
}


def build_env(cfg: dict) -> EnvironmentSpec | None:
    return env_from_json(cfg["env"]) if "env" in cfg else None


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"naqrl": pkg, "python": platform.python_version(), "numpy": np.__version__}


def _run_replicate(cfg: dict, rep: int, n_reps: int) -> list[str]:
    out = Path(cfg["out_dir"])
    if n_reps > 1:
        out = out / f"rep{rep:03d}"
        seed = np.random.SeedSequence(cfg["seed"]).spawn(n_reps)[rep]
    else:
        seed = cfg["seed"]
    out.mkdir(parents=True, exist_ok=True)
    cfg = dict(cfg, _run_id=f"{config_hash(cfg)[:12]}-{rep:03d}")
    files = PIPELINES[cfg["kind"]](cfg, build_env(cfg), make_rng(seed), out)
    base = Path(cfg["out_dir"])
    return [str(Path(f).relative_to(base)) for f in files]


def run(cfg: dict, jobs: int = 1) -> list[str]:
    """Run a validated config; returns emitted files relative to ``out_dir``.

    The manifest is written before the run starts and rewritten when it ends,
    with status ``ok`` or ``error``.
    """
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg, "config_hash": config_hash(cfg), "seed": cfg["seed"],
                "versions": _versions(), "started": _now(), "finished": None,
                "status": "running", "files": []}
    records.write_json(out / MANIFEST, manifest)
    n_reps = cfg.get("replicates", 1)
    try:
        if jobs > 1 and n_reps > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunks = list(pool.map(_run_replicate, [cfg] * n_reps, range(n_reps), [n_reps] * n_reps))
        else:
            chunks = [_run_replicate(cfg, r, n_reps) for r in range(n_reps)]
    except Exception as exc:
        manifest.update(finished=_now(), status="error", error=f"{type(exc).__name__}: {exc}")
        records.write_json(out / MANIFEST, manifest)
        raise
    files = [f for chunk in chunks for f in chunk]
    manifest.update(finished=_now(), status="ok", files=files)
    records.write_json(out / MANIFEST, manifest)
    return files
