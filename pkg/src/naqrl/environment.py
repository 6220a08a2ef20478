"""Non-abelian decision environments.

An environment is a finite set of unitary actions on an n-qubit register, a
Hermitian reward observable, a discount factor and an optional stochastic
Pauli noise channel. Reward is the expectation of the observable on the
post-action (post-noise) state, so a noiseless step is a deterministic
function of (state, action).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .linalg import ShapeError
from .statevector import (PAULIS, StateVector, apply_matrix, basis_state, embed,
                          expectation)


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", linalg.require_hermitian(self.matrix, name="observable"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def frobenius_norm(self) -> float:
        return linalg.frobenius_norm(self.matrix)


@dataclass(frozen=True)
class ActionUnitary:
    """A named unitary. ``targets=None`` means it acts on the whole register."""

    name: str
    matrix: np.ndarray
    targets: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", linalg.require_unitary(self.matrix, name=f"action {self.name!r}"))
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(self.targets))
            if self.matrix.shape[0] != 2 ** len(self.targets):
                raise ShapeError(f"action {self.name!r}: matrix dim {self.matrix.shape[0]} "
                                 f"does not match {len(self.targets)} target qubit(s)")

    def apply(self, state: StateVector) -> StateVector:
        targets = self.targets if self.targets is not None else range(state.num_qubits)
        return apply_matrix(state, self.matrix, tuple(targets))

    def full_matrix(self, num_qubits: int) -> np.ndarray:
        if self.targets is None:
            if self.matrix.shape[0] != 2**num_qubits:
                raise ShapeError(f"action {self.name!r} is {self.matrix.shape[0]}-dim, "
                                 f"register is {2**num_qubits}-dim")
            return self.matrix
        return embed(self.matrix, self.targets, num_qubits)


@dataclass(frozen=True)
class EnvironmentSpec:
    num_qubits: int
    actions: tuple[ActionUnitary, ...]
    reward: Observable
    gamma: float
    noise_p: float = 0.0
    horizon: int = 10
    initial_state: StateVector | None = None

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ValueError("environment needs at least one action")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ValueError(f"noise_p must lie in [0, 1], got {self.noise_p}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        dim = 2**self.num_qubits
        if self.reward.dim != dim:
            raise ShapeError(f"reward is {self.reward.dim}-dim, register is {dim}-dim")
        for a in self.actions:
            if a.targets is None and a.matrix.shape[0] != dim:
                raise ShapeError(f"action {a.name!r} is {a.matrix.shape[0]}-dim, register is {dim}-dim")
            if a.targets is not None and any(not 0 <= t < self.num_qubits for t in a.targets):
                raise ShapeError(f"action {a.name!r} targets {a.targets} outside {self.num_qubits} qubit(s)")
        if self.initial_state is None:
            object.__setattr__(self, "initial_state", basis_state(self.num_qubits, 0))
        elif self.initial_state.num_qubits != self.num_qubits:
            raise ShapeError("initial state does not match num_qubits")

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def action_names(self) -> list[str]:
        return [a.name for a in self.actions]

    def reward_bound(self) -> float:
        """Over-bound on |reward| per step (Frobenius norm dominates the spectral radius)."""
        return self.reward.frobenius_norm()


@dataclass(frozen=True)
class StepOutcome:
    next_state: StateVector
    reward: float
    noise_applied: tuple[str, int] | None = None


def from_hamiltonians(h_list: Sequence, dt: float) -> list[ActionUnitary]:
    """Unitary actions exp(-i h dt), named by their index."""
    return [ActionUnitary(str(k), linalg.expm_skew(h, dt)) for k, h in enumerate(h_list)]


def apply_noise(state: StateVector, p: float,
                rng: np.random.Generator) -> tuple[StateVector, tuple[str, int] | None]:
    """One trajectory of the stochastic Pauli channel.

    With probability ``p`` a uniformly chosen X, Y or Z hits a uniformly
    chosen qubit. Exactly one uniform draw is consumed when nothing happens.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must lie in [0, 1], got {p}")
    if rng.random() >= p:
        return state, None
    kind = "XYZ"[int(rng.integers(3))]
    qubit = int(rng.integers(state.num_qubits))
    return apply_matrix(state, PAULIS[kind], (qubit,)), (kind, qubit)


def step(env: EnvironmentSpec, state: StateVector, action_index: int,
         rng: np.random.Generator) -> StepOutcome:
    if not 0 <= action_index < env.n_actions:
        raise IndexError(f"action index {action_index} out of range (have {env.n_actions})")
    if state.num_qubits != env.num_qubits:
        raise ShapeError(f"state has {state.num_qubits} qubit(s), environment {env.num_qubits}")
    nxt = env.actions[action_index].apply(state)
    event = None
    if env.noise_p > 0.0:
        nxt, event = apply_noise(nxt, env.noise_p, rng)
    return StepOutcome(nxt, expectation(nxt, env.reward), event)


Policy = Callable[[StateVector, int], int]


@dataclass
class EpisodeTrace:
    gamma: float
    states: list[StateVector] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    noise_events: list[tuple[str, int] | None] = field(default_factory=list)

    @property
    def cumulative_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def discounted_return(self) -> float:
        return discounted_sum(self.rewards, self.gamma)


def discounted_sum(rewards: Sequence[float], gamma: float) -> float:
    total, w = 0.0, 1.0
    for r in rewards:
        total += w * r
        w *= gamma
    return total


def run_episode(env: EnvironmentSpec, policy: Policy, rng: np.random.Generator,
                horizon: int | None = None) -> EpisodeTrace:
    """Roll ``policy(state, t) -> action`` for the horizon from the initial state.

    ``states[t]`` is the state the t-th action was chosen in.
    """
    trace = EpisodeTrace(env.gamma)
    state = env.initial_state
    for t in range(env.horizon if horizon is None else horizon):
        a = policy(state, t)
        out = step(env, state, a, rng)
        trace.states.append(state)
        trace.actions.append(a)
        trace.rewards.append(out.reward)
        trace.noise_events.append(out.noise_applied)
        state = out.next_state
    trace.states.append(state)
    return trace


def env_from_json(obj: dict) -> EnvironmentSpec:
    """Build an environment from its JSON description.

    ``{"n", "gamma", "noise_p", "horizon", "reward": <matrix>,
    "actions": [{"name", "matrix"} | {"name", "hamiltonian", "dt"}], "initial": <state>}``
    """
    n = int(obj["n"])
    actions = []
    for k, a in enumerate(obj["actions"]):
        name = str(a.get("name", k))
        targets = tuple(a["targets"]) if "targets" in a else None
        if "matrix" in a:
            m = linalg.matrix_from_json(a["matrix"])
        elif "hamiltonian" in a:
            m = linalg.expm_skew(linalg.matrix_from_json(a["hamiltonian"]), float(a["dt"]))
        else:
            raise ValueError(f"action {name!r} needs 'matrix' or 'hamiltonian'")
        actions.append(ActionUnitary(name, m, targets))
    initial = StateVector.from_json(obj["initial"]) if obj.get("initial") else None
    return EnvironmentSpec(
        num_qubits=n,
        actions=tuple(actions),
        reward=Observable(linalg.matrix_from_json(obj["reward"])),
        gamma=float(obj["gamma"]),
        noise_p=float(obj.get("noise_p", 0.0)),
        horizon=int(obj.get("horizon", 10)),
        initial_state=initial,
    )


def env_to_json(env: EnvironmentSpec) -> dict:
    actions = []
    for a in env.actions:
        d = {"name": a.name, "matrix": linalg.matrix_to_json(a.matrix)}
        if a.targets is not None:
            d["targets"] = list(a.targets)
        actions.append(d)
    return {"n": env.num_qubits, "gamma": env.gamma, "noise_p": env.noise_p,
            "horizon": env.horizon, "reward": linalg.matrix_to_json(env.reward.matrix),
            "actions": actions, "initial": env.initial_state.to_json()}
