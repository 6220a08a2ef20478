"""Tabular quantum Q-learning, value iteration and operator-form Bellman values.

Quantum states are continuous, so tabular methods key them through a
:class:`StateRegistry`: a state maps to the first stored reference state whose
fidelity with it reaches ``fid_threshold``, or becomes a new reference.

The state value is V(s) = max_a Q(s, a) and the advantage is Q - V, so the
greedy action always has advantage exactly zero. Argmax ties go to the lowest
action index everywhere in this module.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import linalg
from .environment import (ActionUnitary, EnvironmentSpec, Observable, discounted_sum,
                          step)
from .linalg import ShapeError
from .statevector import StateVector, expectation

DEFAULT_FID_THRESHOLD = 0.99
DEFAULT_REGISTRY_CAP = 100_000


class RegistryOverflow(RuntimeError):
    """The registry would grow past its cap; coarsen ``fid_threshold``."""


class StateRegistry:
    def __init__(self, fid_threshold: float = DEFAULT_FID_THRESHOLD,
                 cap: int = DEFAULT_REGISTRY_CAP):
        if not 0.0 < fid_threshold <= 1.0:
            raise ValueError(f"fid_threshold must lie in (0, 1], got {fid_threshold}")
        self.fid_threshold = fid_threshold
        self.cap = cap
        self.reference_states: list[StateVector] = []
        self._buf: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.reference_states)

    def __getitem__(self, key: int) -> StateVector:
        return self.reference_states[key]

    def lookup(self, psi: StateVector) -> int | None:
        """Key of the first reference state within threshold, else None."""
        n = len(self.reference_states)
        if n == 0:
            return None
        if psi.dim != self._buf.shape[1]:
            raise ShapeError(f"registry holds {self._buf.shape[1]}-dim states, got {psi.dim}")
        fids = np.abs(self._buf[:n].conj() @ psi.amplitudes) ** 2
        hits = np.flatnonzero(fids >= self.fid_threshold)
        return int(hits[0]) if hits.size else None

    def state_key(self, psi: StateVector) -> int:
        key = self.lookup(psi)
        if key is not None:
            return key
        n = len(self.reference_states)
        if n >= self.cap:
            raise RegistryOverflow(
                f"state registry reached its cap of {self.cap} buckets at fid_threshold="
                f"{self.fid_threshold}; lower the threshold or raise the cap")
        if self._buf is None:
            self._buf = np.zeros((16, psi.dim), dtype=complex)
        elif n == self._buf.shape[0]:
            self._buf = np.concatenate([self._buf, np.zeros_like(self._buf)])
        self._buf[n] = psi.amplitudes
        self.reference_states.append(psi)
        return n


def state_key(reg: StateRegistry, psi: StateVector) -> int:
    return reg.state_key(psi)


class QTable:
    """Action values per registry key; unseen (key, action) pairs read as 0."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self._rows: dict[int, np.ndarray] = {}

    def ensure(self, key: int) -> np.ndarray:
        row = self._rows.get(key)
        if row is None:
            row = self._rows[key] = np.zeros(self.n_actions)
        return row

    def __contains__(self, key: int) -> bool:
        return key in self._rows

    def keys(self) -> list[int]:
        return sorted(self._rows)

    def row(self, key: int) -> np.ndarray:
        if key not in self._rows:
            raise KeyError(f"state key {key} not in table")
        return self._rows[key]

    def get(self, key: int, action: int) -> float:
        row = self._rows.get(key)
        return 0.0 if row is None else float(row[action])

    def set(self, key: int, action: int, value: float) -> None:
        if not np.isfinite(value):
            raise ValueError(f"non-finite Q value at ({key}, {action})")
        self.ensure(key)[action] = value

    def max_value(self, key: int) -> float:
        row = self._rows.get(key)
        return 0.0 if row is None else float(row.max())

    def greedy(self, key: int) -> int:
        row = self._rows.get(key)
        return 0 if row is None else int(np.argmax(row))

    def items(self) -> Iterator[tuple[int, int, float]]:
        for k in self.keys():
            for a, v in enumerate(self._rows[k]):
                yield k, a, float(v)

    def copy(self) -> "QTable":
        out = QTable(self.n_actions)
        out._rows = {k: v.copy() for k, v in self._rows.items()}
        return out

    def __len__(self) -> int:
        return len(self._rows)


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float = 0.1
    epsilon: float = 0.1
    episodes: int = 1000
    gamma: float | None = None  # taken from the environment when training
    fid_threshold: float = DEFAULT_FID_THRESHOLD
    registry_cap: int = DEFAULT_REGISTRY_CAP

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")


def q_update(q: QTable, key: int, action: int, reward: float, next_key: int,
             cfg: LearnerConfig, gamma: float | None = None) -> QTable:
    """One temporal-difference step, in place:
    Q(s,a) += alpha * (r + gamma * max_b Q(s',b) - Q(s,a)).
    """
    g = cfg.gamma if gamma is None else gamma
    if g is None:
        raise ValueError("discount factor missing: set cfg.gamma or pass gamma")
    old = q.get(key, action)
    target = reward + g * q.max_value(next_key)
    q.set(key, action, old + cfg.alpha * (target - old))
    q.ensure(next_key)
    return q


def epsilon_greedy(q: QTable, key: int, epsilon: float, rng: np.random.Generator) -> int:
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(q.n_actions))
    return q.greedy(key)


@dataclass
class TrainResult:
    q: QTable
    registry: StateRegistry
    returns: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)


def train(env: EnvironmentSpec, cfg: LearnerConfig, rng: np.random.Generator,
          registry: StateRegistry | None = None) -> TrainResult:
    """Epsilon-greedy quantum Q-learning over fidelity-bucketed states.

    Episodes start from ``env.initial_state`` and are truncated at the
    horizon; truncation bootstraps (it is not treated as terminal).
    """
    cfg = dataclasses.replace(cfg, gamma=env.gamma)
    reg = registry if registry is not None else StateRegistry(cfg.fid_threshold, cfg.registry_cap)
    q = QTable(env.n_actions)
    result = TrainResult(q, reg)
    for _ in range(cfg.episodes):
        state = env.initial_state
        s = reg.state_key(state)
        q.ensure(s)
        rewards = []
        for _t in range(env.horizon):
            a = epsilon_greedy(q, s, cfg.epsilon, rng)
            out = step(env, state, a, rng)
            s_next = reg.state_key(out.next_state)
            q_update(q, s, a, out.reward, s_next, cfg)
            rewards.append(out.reward)
            state, s = out.next_state, s_next
        result.returns.append(discounted_sum(rewards, env.gamma))
        result.epsilons.append(cfg.epsilon)
    return result


@dataclass
class Closure:
    """Deterministic transition structure over registry keys."""

    next_key: np.ndarray  # (n_states, n_actions) int
    reward: np.ndarray  # (n_states, n_actions) float


def build_closure(env: EnvironmentSpec, reg: StateRegistry) -> Closure:
    """Register every state reachable from the initial state.

    Keys are handed out sequentially, so walking them in index order is a
    breadth-first search. Keys registered earlier (e.g. by training) are
    expanded too. Transitions are computed from each bucket's reference state.
    """
    if env.noise_p > 0.0:
        raise ValueError("closure needs a noiseless environment (noise_p = 0)")
    reg.state_key(env.initial_state)
    next_key, reward = [], []
    s = 0
    while s < len(reg):
        ks, rs = [], []
        for act in env.actions:
            psi = act.apply(reg[s])
            ks.append(reg.state_key(psi))  # raises RegistryOverflow at the cap
            rs.append(expectation(psi, env.reward))
        next_key.append(ks)
        reward.append(rs)
        s += 1
    return Closure(np.array(next_key, dtype=int), np.array(reward))


@dataclass
class ValueIterationResult:
    q: QTable
    deltas: list[float]
    closure: Closure

    @property
    def sweeps(self) -> int:
        return len(self.deltas)

    def contraction_ratios(self) -> list[float]:
        d = self.deltas
        return [d[k + 1] / d[k] for k in range(len(d) - 1) if d[k] > 0]


def value_iteration(env: EnvironmentSpec, reg: StateRegistry, tol: float = 1e-8,
                    max_sweeps: int = 100_000) -> ValueIterationResult:
    """Synchronous sweeps of Q(s,a) <- r(s,a) + gamma * max_b Q(s'(s,a), b) from Q = 0.

    Stops once the last sweep change guarantees sup-norm distance <= ``tol``
    to the fixed point, i.e. delta * gamma / (1 - gamma) <= tol.
    """
    closure = build_closure(env, reg)
    g = env.gamma
    values = np.zeros_like(closure.reward)
    deltas: list[float] = []
    for _ in range(max_sweeps):
        new = closure.reward + g * values.max(axis=1)[closure.next_key]
        delta = float(np.max(np.abs(new - values)))
        values = new
        deltas.append(delta)
        if delta * g <= tol * (1.0 - g):
            break
    else:
        raise RuntimeError(f"value iteration did not reach tol={tol} in {max_sweeps} sweeps")
    q = QTable(env.n_actions)
    for s in range(values.shape[0]):
        q.ensure(s)[:] = values[s]
    return ValueIterationResult(q, deltas, closure)


def bellman_operator(reward, transition) -> Observable:
    """Conjugate the reward observable by the transition: T^dagger R T."""
    r = getattr(reward, "matrix", reward)
    t = linalg.require_unitary(getattr(transition, "matrix", transition), name="transition")
    r = linalg.as_matrix(r)
    if r.shape != t.shape:
        raise ShapeError(f"reward is {r.shape}, transition is {t.shape}")
    return Observable(t.conj().T @ r @ t)


class OperatorValue(NamedTuple):
    value: float
    truncation_bound: float


def _resolve(env: EnvironmentSpec, a) -> ActionUnitary:
    return env.actions[a] if isinstance(a, (int, np.integer)) else a


def discounted_operator_value(psi: StateVector, plan: Sequence, env: EnvironmentSpec,
                              n_terms: int) -> OperatorValue:
    """sum_{t<n_terms} gamma^t <psi_{t+1}|R|psi_{t+1}> along a (cycled) action plan.

    ``plan`` holds action indices into ``env.actions`` or ActionUnitary
    objects, in the order they are applied. The returned bound caps the
    tail that truncation drops: gamma^n_terms * ||R||_F / (1 - gamma).
    """
    if not plan:
        raise ValueError("plan must contain at least one action")
    if env.noise_p > 0.0:
        raise ValueError("operator-form values need a noiseless environment")
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    actions = [_resolve(env, a) for a in plan]
    total, w, state = 0.0, 1.0, psi
    for t in range(n_terms):
        state = actions[t % len(actions)].apply(state)
        total += w * expectation(state, env.reward)
        w *= env.gamma
    bound = env.gamma**n_terms * env.reward_bound() / (1.0 - env.gamma)
    return OperatorValue(total, bound)


def advantage(q: QTable, key: int, action: int) -> float:
    """Q(key, action) - max_b Q(key, b); never positive."""
    row = q.row(key)
    return float(row[action] - row.max())


def sequence_q(psi: StateVector, actions: Sequence, reward) -> float:
    """<psi| U_n^dag ... U_1^dag R U_1 ... U_n |psi> for ``actions = [U_1, ..., U_n]``.

    Operators compose right to left, so U_n reaches the state first.
    """
    state = psi
    for a in reversed(list(actions)):
        if isinstance(a, ActionUnitary):
            state = a.apply(state)
        else:
            m = linalg.as_matrix(a)
            if m.shape[0] != state.dim:
                raise ShapeError(f"action is {m.shape[0]}-dim, state is {state.dim}-dim")
            state = ActionUnitary("_", m).apply(state)
    return expectation(state, reward)
