"""Parameterized quantum circuits and PQC-driven agents.

A :class:`CircuitTemplate` is an ordered list of gate placements; R and CR
placements read their angle from a shared parameter vector. Gradients use
exact parameter-shift rules per placement: the two-term pi/2 rule for R
(generator eigenvalues +-1/2) and the four-term rule for CR, whose generator
|1><1| (x) Y/2 also has eigenvalue 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .environment import EnvironmentSpec, discounted_sum, step
from .rng import make_rng
from .statevector import GateSpec, StateVector, apply_gate, basis_state, expectation, sample_leading

TEMPLATE_KINDS = {"R", "CR", "H", "CNOT"}
FD_STEP = 1e-5

_SQ2 = math.sqrt(2.0)
# (shift, coefficient) pairs: dE/dtheta = sum c * [E(theta + s) - E(theta - s)]
SHIFT_RULES = {
    "R": ((math.pi / 2, 0.5),),
    "CR": ((math.pi / 2, (_SQ2 + 1) / (4 * _SQ2)),
           (3 * math.pi / 2, -(_SQ2 - 1) / (4 * _SQ2))),
}


@dataclass(frozen=True)
class Placement:
    kind: str
    targets: tuple[int, ...]
    param_index: int | None = None


@dataclass(frozen=True)
class CircuitTemplate:
    num_qubits: int
    placements: tuple[Placement, ...]
    num_params: int

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(
            p if isinstance(p, Placement) else Placement(p[0], tuple(p[1]), p[2] if len(p) > 2 else None)
            for p in self.placements))
        used = set()
        for i, p in enumerate(self.placements):
            if p.kind not in TEMPLATE_KINDS:
                raise ValueError(f"placement {i}: kind {p.kind!r} not in {sorted(TEMPLATE_KINDS)}")
            if any(not 0 <= t < self.num_qubits for t in p.targets):
                raise ValueError(f"placement {i}: targets {p.targets} outside {self.num_qubits} qubit(s)")
            if p.kind in SHIFT_RULES:
                if p.param_index is None or not 0 <= p.param_index < self.num_params:
                    raise ValueError(f"placement {i}: {p.kind} needs param_index in [0, {self.num_params})")
                used.add(p.param_index)
            elif p.param_index is not None:
                raise ValueError(f"placement {i}: fixed gate {p.kind} cannot take a parameter")
        unused = set(range(self.num_params)) - used
        if unused:
            raise ValueError(f"parameters {sorted(unused)} are not used by any placement")

    def to_json(self) -> dict:
        ps = []
        for p in self.placements:
            d = {"kind": p.kind, "targets": list(p.targets)}
            if p.param_index is not None:
                d["param_index"] = p.param_index
            ps.append(d)
        return {"n": self.num_qubits, "params": self.num_params, "placements": ps}

    @classmethod
    def from_json(cls, obj: dict) -> "CircuitTemplate":
        return cls(int(obj["n"]), tuple(
            Placement(p["kind"], tuple(p["targets"]), p.get("param_index")) for p in obj["placements"]),
            int(obj["params"]))


def _theta(template: CircuitTemplate, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float).reshape(-1)
    if th.size != template.num_params:
        raise ValueError(f"template takes {template.num_params} parameter(s), got {th.size}")
    if not np.all(np.isfinite(th)):
        raise ValueError("parameters must be finite")
    return th


def evaluate(template: CircuitTemplate, theta, initial: StateVector | None = None,
             shift: tuple[int, float] | None = None) -> StateVector:
    """Run the template on |0...0> (or ``initial``).

    ``shift=(placement_index, delta)`` offsets one placement's angle only;
    gradient rules use it so that shared parameters are differentiated per use.
    """
    th = _theta(template, theta)
    state = initial if initial is not None else basis_state(template.num_qubits, 0)
    if state.num_qubits != template.num_qubits:
        raise ValueError(f"template has {template.num_qubits} qubit(s), state {state.num_qubits}")
    for i, p in enumerate(template.placements):
        angle = None
        if p.param_index is not None:
            angle = th[p.param_index]
            if shift is not None and shift[0] == i:
                angle += shift[1]
        state = apply_gate(state, GateSpec(p.kind, p.targets, angle))
    return state


def cost(template: CircuitTemplate, theta, obs) -> float:
    return expectation(evaluate(template, theta), obs)


def finite_difference_gradient(template: CircuitTemplate, theta, obs, h: float = FD_STEP) -> np.ndarray:
    th = _theta(template, theta)
    g = np.zeros_like(th)
    for k in range(th.size):
        e = np.zeros_like(th)
        e[k] = h
        g[k] = (cost(template, th + e, obs) - cost(template, th - e, obs)) / (2 * h)
    return g


def gradient(template: CircuitTemplate, theta, obs) -> np.ndarray:
    """Exact parameter-shift gradient of the cost."""
    th = _theta(template, theta)
    g = np.zeros_like(th)
    for i, p in enumerate(template.placements):
        if p.param_index is None:
            continue
        rule = SHIFT_RULES.get(p.kind)
        if rule is None:
            return finite_difference_gradient(template, th, obs)
        for s, c in rule:
            plus = expectation(evaluate(template, th, shift=(i, s)), obs)
            minus = expectation(evaluate(template, th, shift=(i, -s)), obs)
            g[p.param_index] += c * (plus - minus)
    return g


class TraceRow(NamedTuple):
    iter: int
    cost: float
    grad_norm: float


class OptimizeResult(NamedTuple):
    theta: np.ndarray
    trace: list[TraceRow]
    status: str  # "converged", "max_iters" or "non_finite"

    @property
    def final_cost(self) -> float:
        return self.trace[-1].cost


def optimize(template: CircuitTemplate, theta0, obs, lr: float, iters: int) -> OptimizeResult:
    """Plain gradient descent, stopping early once max|g| < 1e-8."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    th = _theta(template, theta0).copy()
    trace: list[TraceRow] = []
    for k in range(iters + 1):
        c = cost(template, th, obs)
        g = gradient(template, th, obs)
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        trace.append(TraceRow(k, c, gnorm))
        if not (math.isfinite(c) and np.all(np.isfinite(g))):
            return OptimizeResult(th, trace, "non_finite")
        if gnorm < 1e-8:
            return OptimizeResult(th, trace, "converged")
        if k == iters:
            break
        nxt = th - lr * g
        if not np.all(np.isfinite(nxt)):
            return OptimizeResult(th, trace, "non_finite")
        th = nxt
    return OptimizeResult(th, trace, "max_iters")


# ---------------------------------------------------------------------------
# PQC agent


def selector_qubits(n_actions: int) -> int:
    return max(0, math.ceil(math.log2(n_actions))) if n_actions > 1 else 0


class PQCPolicy:
    """Open-loop policy: measure the leading qubits of |psi(theta)>, index mod |A|."""

    def __init__(self, template: CircuitTemplate, theta, n_actions: int, rng: np.random.Generator):
        self.n_actions = n_actions
        self.k = selector_qubits(n_actions)
        if template.num_qubits < self.k:
            raise ValueError(f"{n_actions} actions need >= {self.k} selector qubit(s), "
                             f"template has {template.num_qubits}")
        self.state = evaluate(template, theta)
        self.rng = rng

    def action_probabilities(self) -> np.ndarray:
        marginal = self.state.probabilities.reshape(2**self.k, -1).sum(axis=1)
        probs = np.zeros(self.n_actions)
        np.add.at(probs, np.arange(marginal.size) % self.n_actions, marginal)
        return probs

    def __call__(self, *_args) -> int:
        return sample_leading(self.state, self.k, self.rng) % self.n_actions


def _episode_return(env: EnvironmentSpec, policy, rng: np.random.Generator) -> float:
    state, rewards = env.initial_state, []
    for t in range(env.horizon):
        out = step(env, state, policy(state, t), rng)
        rewards.append(out.reward)
        state = out.next_state
    return discounted_sum(rewards, env.gamma)


@dataclass(frozen=True)
class AgentConfig:
    episodes: int = 200
    lr: float = 0.1
    batch: int = 16
    fd_h: float = 0.05
    theta0: tuple[float, ...] | None = None


@dataclass
class AgentResult:
    theta: np.ndarray
    returns: list[float] = field(default_factory=list)
    best_estimate: float = float("-inf")
    final_theta: np.ndarray | None = None


def _batch_return(env, template, theta, seeds: Sequence[int]) -> float:
    total = 0.0
    for s in seeds:
        rng = make_rng(int(s))
        # one stream per episode: action draws and noise draws interleave identically at theta +- h
        total += _episode_return(env, PQCPolicy(template, theta, env.n_actions, rng), rng)
    return total / len(seeds)


def train_pqc_agent(env: EnvironmentSpec, template: CircuitTemplate, cfg: AgentConfig,
                    rng: np.random.Generator) -> AgentResult:
    """Monte Carlo policy-gradient ascent on the discounted return.

    Each outer episode plays one episode at the current theta (its discounted
    return goes into ``returns``), then estimates dJ/dtheta_k by central
    differences of batch-mean returns at theta +- h e_k with common random
    numbers, and steps theta uphill. The theta whose batch-mean estimate was
    highest is returned as ``theta``.
    """
    if cfg.theta0 is not None:
        th = _theta(template, cfg.theta0).copy()
    else:
        th = rng.uniform(0.0, 2 * math.pi, size=template.num_params)
    result = AgentResult(th.copy())
    for _ in range(cfg.episodes):
        ep_rng = make_rng(int(rng.integers(2**63)))
        result.returns.append(_episode_return(env, PQCPolicy(template, th, env.n_actions, ep_rng), ep_rng))
        if template.num_params == 0:
            continue
        seeds = rng.integers(2**63, size=cfg.batch)
        g = np.zeros_like(th)
        mids = []
        for k in range(th.size):
            e = np.zeros_like(th)
            e[k] = cfg.fd_h
            jp = _batch_return(env, template, th + e, seeds)
            jm = _batch_return(env, template, th - e, seeds)
            g[k] = (jp - jm) / (2 * cfg.fd_h)
            mids.append(0.5 * (jp + jm))
        estimate = float(np.mean(mids))
        if estimate > result.best_estimate:
            result.best_estimate, result.theta = estimate, th.copy()
        th = th + cfg.lr * g
    result.final_theta = th
    return result
