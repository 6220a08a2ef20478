"""Pure-state simulator for up to 12 qubits.

Basis ordering: qubit 0 is the MOST significant bit of a basis index, so on
two qubits index 2 is |10>. Gates are applied by contracting the gate tensor
against the target axes of the reshaped amplitude tensor; the full 2^n matrix
is never formed.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import (ShapeError, as_matrix, is_unitary, matrix_from_json,
                     matrix_to_json, require_hermitian, unitarity_residual)

MAX_QUBITS = 12
NORM_TOL = 1e-9
FAULT_ENV = "NAQRL_FAULT"

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)
PAULIS = {"X": X, "Y": Y, "Z": Z}


def hadamard() -> np.ndarray:
    # NAQRL_FAULT=hadamard_norm drops the 1/sqrt(2); used to prove the selftest bites
    scale = 1.0 if os.environ.get(FAULT_ENV) == "hadamard_norm" else 1 / math.sqrt(2)
    return scale * np.array([[1, 1], [1, -1]], dtype=complex)


H = 1 / math.sqrt(2) * np.array([[1, 1], [1, -1]], dtype=complex)


def rotation(theta: float) -> np.ndarray:
    """Real single-qubit rotation [[cos t/2, -sin t/2], [sin t/2, cos t/2]]."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def controlled_rotation(theta: float) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = rotation(theta)
    return u


GATE_ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "R": 1, "CNOT": 2, "CR": 2}
PARAMETRIC = {"R", "CR"}


@dataclass(frozen=True)
class GateSpec:
    kind: str
    targets: tuple[int, ...]
    param: float | None = None
    custom_matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind == "Custom":
            if self.custom_matrix is None:
                raise ValueError("Custom gate needs custom_matrix")
            m = as_matrix(self.custom_matrix, name="custom_matrix")
            if m.shape != (2 ** len(self.targets),) * 2:
                raise ShapeError(f"Custom gate on {len(self.targets)} qubits needs a "
                                 f"{2 ** len(self.targets)}-dim square matrix, got {m.shape}")
            object.__setattr__(self, "custom_matrix", m)
        elif self.kind in GATE_ARITY:
            if len(self.targets) != GATE_ARITY[self.kind]:
                raise ValueError(f"{self.kind} acts on {GATE_ARITY[self.kind]} qubit(s), "
                                 f"got targets {self.targets}")
            if self.kind in PARAMETRIC and self.param is None:
                raise ValueError(f"{self.kind} needs an angle")
            if self.param is not None and not math.isfinite(self.param):
                raise ValueError("gate angle must be finite")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"gate targets must be distinct, got {self.targets}")

    def matrix(self) -> np.ndarray:
        """Local 2^k x 2^k matrix; first target is the most significant."""
        k = self.kind
        if k == "Custom":
            return self.custom_matrix
        if k == "H":
            return hadamard()
        if k in PAULIS:
            return PAULIS[k]
        if k == "R":
            return rotation(self.param)
        if k == "CR":
            return controlled_rotation(self.param)
        return CNOT

    def to_json(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets)}
        if self.param is not None:
            out["param"] = float(self.param)
        if self.custom_matrix is not None:
            out["matrix"] = matrix_to_json(self.custom_matrix)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GateSpec":
        m = obj.get("matrix")
        return cls(obj["kind"], tuple(obj["targets"]), obj.get("param"),
                   None if m is None else matrix_from_json(m))


class StateVector:
    """Normalized amplitudes over 2^n basis states. Immutable."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, *, normalize: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(amps.size))) if amps.size else -1
        if n < 1 or 2**n != amps.size or n > MAX_QUBITS:
            raise ShapeError(f"state needs 2^n amplitudes with 1 <= n <= {MAX_QUBITS}, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state has non-finite amplitudes")
        norm = float(np.linalg.norm(amps))
        if normalize:
            if norm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: norm = {norm!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self):
        return f"StateVector(n={self.num_qubits}, amplitudes={np.array2string(self.amplitudes, precision=4)})"

    def to_json(self) -> dict:
        return {"n": self.num_qubits,
                "re": [float(x) for x in self.amplitudes.real],
                "im": [float(x) for x in self.amplitudes.imag]}

    @classmethod
    def from_json(cls, obj: dict) -> "StateVector":
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.size != 2 ** int(obj["n"]) or im.size != re.size:
            raise ShapeError(f"state literal: n={obj['n']} needs {2 ** int(obj['n'])} amplitudes")
        return cls(re + 1j * im)


def basis_state(num_qubits: int, index: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}")
    if not 0 <= index < 2**num_qubits:
        raise IndexError(f"basis index {index} out of range for {num_qubits} qubit(s)")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def apply_matrix(state: StateVector, u: np.ndarray, targets: Sequence[int]) -> StateVector:
    """Apply a 2^k x 2^k unitary to the listed qubits by local contraction."""
    n, k = state.num_qubits, len(targets)
    if any(not 0 <= t < n for t in targets):
        raise IndexError(f"targets {tuple(targets)} out of range for {n} qubit(s)")
    if len(set(targets)) != k:
        raise ValueError(f"targets must be distinct, got {tuple(targets)}")
    u = as_matrix(u)
    if u.shape != (2**k, 2**k):
        raise ShapeError(f"{k}-qubit gate needs a {2**k}x{2**k} matrix, got {u.shape}")
    if not is_unitary(u):
        raise ValueError(f"gate matrix not unitary (residual {unitarity_residual(u):.3e})")
    psi = state.amplitudes.reshape((2,) * n)
    gate = u.reshape((2,) * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate's output axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), list(targets))
    return StateVector(out.reshape(-1))


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    return apply_matrix(state, gate.matrix(), gate.targets)


def apply_gates(state: StateVector, gates: Sequence[GateSpec]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def embed(u: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Full 2^n matrix of a local gate, built column by column from apply_matrix."""
    dim = 2**num_qubits
    cols = [apply_matrix(basis_state(num_qubits, j), u, targets).amplitudes for j in range(dim)]
    return np.column_stack(cols)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), probs.size - 1)


def measure_computational(state: StateVector, rng: np.random.Generator) -> tuple[int, StateVector, float]:
    """Born-rule measurement of all qubits; returns (outcome, collapsed state, probability)."""
    probs = state.probabilities
    outcome = _draw(probs, rng)
    return outcome, basis_state(state.num_qubits, outcome), float(probs[outcome])


def sample_leading(state: StateVector, k: int, rng: np.random.Generator) -> int:
    """Sample the joint outcome of qubits 0..k-1 without collapsing ``state``."""
    if k == 0:
        return 0
    if not 0 < k <= state.num_qubits:
        raise ValueError(f"cannot read {k} leading qubits of a {state.num_qubits}-qubit state")
    marginal = state.probabilities.reshape(2**k, -1).sum(axis=1)
    return _draw(marginal, rng)


def expectation(state: StateVector, obs) -> float:
    """<psi|obs|psi>; accepts an Observable or a raw Hermitian matrix."""
    m = require_hermitian(getattr(obs, "matrix", obs), name="observable")
    if m.shape[0] != state.dim:
        raise ShapeError(f"observable is {m.shape[0]}-dim, state is {state.dim}-dim")
    psi = state.amplitudes
    return float(np.vdot(psi, m @ psi).real)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.dim != b.dim:
        raise ShapeError(f"fidelity: {a.num_qubits} vs {b.num_qubits} qubits")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def gates_from_json(items: list[dict]) -> list[GateSpec]:
    return [GateSpec.from_json(o) for o in items]
