"""Measured performance gap between a PQC agent and a classical tabular agent.

The classical agent only ever sees computational-basis measurement outcomes:
each step the environment state is measured, collapses, and the agent acts on
the collapsed state. Both agents are evaluated in that same measured
environment so the comparison is like for like.

For each agent we roll out evaluation episodes and record, per visited
(outcome, action) pair, the reward expectation on the post-action state. The
empirical visitation frequencies give P(s) and P(a|s), and

    E[Q] = sum_s sum_a P(s) P(a|s) Q(s, a)

with Q(s, a) the mean recorded reward. The reported gap a_q = E[Q_Q] - E[Q_C]
is a measured difference on a simulated task, not a complexity-theoretic
statement about quantum speedups.
"""
from __future__ import annotations

import dataclasses
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .bellman import LearnerConfig, QTable, epsilon_greedy, q_update
from .environment import EnvironmentSpec, step
from .pqc import CircuitTemplate, PQCPolicy
from .rng import make_rng
from .statevector import measure_computational

DIST_TOL = 1e-9
REPORT_HEADER = ("P(s) and P(a|s) are the empirical visitation distributions of each "
                 "agent's own evaluation rollouts in the measured environment")

# policy factory: agent rng -> (outcome, t) -> action
PolicyFactory = Callable[[np.random.Generator], Callable[[int, int], int]]


@dataclass
class ClassicalBaseline:
    q_table: QTable
    visit_counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def policy(self, epsilon: float = 0.0) -> PolicyFactory:
        def factory(rng):
            return lambda s, _t: epsilon_greedy(self.q_table, s, epsilon, rng)
        return factory


def train_classical(env: EnvironmentSpec, cfg: LearnerConfig, rng: np.random.Generator) -> ClassicalBaseline:
    """Tabular epsilon-greedy Q-learning on measurement outcomes."""
    cfg = dataclasses.replace(cfg, gamma=env.gamma)
    q = QTable(env.n_actions)
    counts: dict[tuple[int, int], int] = defaultdict(int)
    for _ in range(cfg.episodes):
        s, state, _p = measure_computational(env.initial_state, rng)
        for _t in range(env.horizon):
            a = epsilon_greedy(q, s, cfg.epsilon, rng)
            out = step(env, state, a, rng)
            s_next, nxt, _p = measure_computational(out.next_state, rng)
            q_update(q, s, a, out.reward, s_next, cfg)
            counts[(s, a)] += 1
            s, state = s_next, nxt
    return ClassicalBaseline(q, dict(sorted(counts.items())))


def _check_distributions(state_dist: Mapping, policy_dist: Mapping) -> None:
    total = sum(state_dist.values())
    if abs(total - 1.0) > DIST_TOL:
        raise ValueError(f"state distribution sums to {total!r}, not 1")
    per_state: dict = defaultdict(float)
    for (s, _a), p in policy_dist.items():
        per_state[s] += p
    bad = {s: t for s, t in per_state.items() if abs(t - 1.0) > DIST_TOL}
    missing = [s for s, p in state_dist.items() if p > 0 and s not in per_state]
    if bad or missing:
        raise ValueError(f"policy distribution not normalized per state: sums {bad}, "
                         f"states without actions {missing}")


def expected_value(values: Mapping, state_dist: Mapping, policy_dist: Mapping) -> float:
    """sum_s sum_a P(s) P(a|s) Q(s, a).

    ``values`` and ``policy_dist`` are keyed by (state, action);
    ``state_dist`` by state.
    """
    _check_distributions(state_dist, policy_dist)
    total = 0.0
    for (s, a), pa in policy_dist.items():
        ps = state_dist.get(s, 0.0)
        if ps * pa != 0.0:
            total += ps * pa * values[(s, a)]
    return total


@dataclass
class Rollouts:
    """Per-(outcome, action) visit counts and reward sums."""

    counts: dict[tuple[int, int], int] = field(default_factory=lambda: defaultdict(int))
    reward_sums: dict[tuple[int, int], float] = field(default_factory=lambda: defaultdict(float))

    def q_values(self) -> dict[tuple[int, int], float]:
        return {k: self.reward_sums[k] / n for k, n in sorted(self.counts.items())}

    def distributions(self) -> tuple[dict[int, float], dict[tuple[int, int], float]]:
        total = sum(self.counts.values())
        by_state: dict[int, int] = defaultdict(int)
        for (s, _a), n in self.counts.items():
            by_state[s] += n
        state_dist = {s: n / total for s, n in sorted(by_state.items())}
        policy_dist = {(s, a): n / by_state[s] for (s, a), n in sorted(self.counts.items())}
        return state_dist, policy_dist


def rollout_stats(env: EnvironmentSpec, policy: PolicyFactory, seeds) -> Rollouts:
    """Roll the policy once per seed in the measured environment.

    Each seed splits into three streams (measurement, noise, agent) so two
    agents that pick the same actions see identical measurement and noise draws.
    """
    stats = Rollouts()
    for seed in seeds:
        m_rng, n_rng, a_rng = (make_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(3))
        act = policy(a_rng)
        state = env.initial_state
        for t in range(env.horizon):
            s, collapsed, _p = measure_computational(state, m_rng)
            a = act(s, t)
            out = step(env, collapsed, a, n_rng)
            stats.counts[(s, a)] += 1
            stats.reward_sums[(s, a)] += out.reward
            state = out.next_state
    return stats


@dataclass
class AdvantageReport:
    e_qq: float
    e_qc: float
    a_q: float
    state_distribution: dict[int, float]
    policy_distribution: dict[tuple[int, int], float]
    classical_state_distribution: dict[int, float]
    classical_policy_distribution: dict[tuple[int, int], float]
    episodes: int
    header: str = REPORT_HEADER

    def to_json(self) -> dict:
        def sd(d):
            return [{"outcome": s, "probability": p} for s, p in d.items()]

        def pd(d):
            return [{"outcome": s, "action": a, "probability": p} for (s, a), p in d.items()]

        return {"header": self.header, "e_qq": self.e_qq, "e_qc": self.e_qc, "a_q": self.a_q,
                "episodes": self.episodes,
                "state_distribution": sd(self.state_distribution),
                "policy_distribution": pd(self.policy_distribution),
                "classical_state_distribution": sd(self.classical_state_distribution),
                "classical_policy_distribution": pd(self.classical_policy_distribution)}


def compare_policies(env: EnvironmentSpec, quantum: PolicyFactory, classical: PolicyFactory,
                     n_eval_episodes: int, rng: np.random.Generator) -> AdvantageReport:
    if n_eval_episodes < 1:
        raise ValueError("need at least one evaluation episode")
    seeds = rng.integers(2**63, size=n_eval_episodes)
    values = []
    for policy in (quantum, classical):
        stats = rollout_stats(env, policy, seeds)
        sdist, pdist = stats.distributions()
        values.append((expected_value(stats.q_values(), sdist, pdist), sdist, pdist))
    (e_qq, sq, pq), (e_qc, sc, pc) = values
    return AdvantageReport(e_qq, e_qc, e_qq - e_qc, sq, pq, sc, pc, n_eval_episodes)


def pqc_policy(env: EnvironmentSpec, template: CircuitTemplate, theta) -> PolicyFactory:
    def factory(rng):
        pol = PQCPolicy(template, theta, env.n_actions, rng)
        return lambda _s, t: pol(None, t)
    return factory


def quantum_advantage(env: EnvironmentSpec, template: CircuitTemplate, theta,
                      baseline: ClassicalBaseline, n_eval_episodes: int,
                      rng: np.random.Generator, classical_epsilon: float = 0.0) -> AdvantageReport:
    """A_Q(theta) = E[Q_Q(theta)] - E[Q_C].

    The classical agent acts greedily on its table unless ``classical_epsilon``
    asks for epsilon-greedy evaluation.
    """
    return compare_policies(env, pqc_policy(env, template, theta),
                            baseline.policy(classical_epsilon), n_eval_episodes, rng)
