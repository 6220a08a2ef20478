"""Statevector simulation of quantum reinforcement learning with non-commuting actions."""
from .environment import (ActionUnitary, EnvironmentSpec, Observable, StepOutcome, apply_noise,
                          from_hamiltonians, run_episode, step)
from .rng import make_rng
from .statevector import GateSpec, StateVector, apply_gate, basis_state, expectation, fidelity

__all__ = [
    "ActionUnitary", "EnvironmentSpec", "Observable", "StepOutcome", "apply_noise",
    "from_hamiltonians", "run_episode", "step", "make_rng",
    "GateSpec", "StateVector", "apply_gate", "basis_state", "expectation", "fidelity",
]
