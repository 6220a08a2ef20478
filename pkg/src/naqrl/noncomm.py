"""How far a set of actions is from commuting.

Commutator norms, pairwise degree matrices, closure of small finite matrix
groups with their commutator subgroups, and an order-sensitivity diagnostic
that reads the degree off the reward: the gap between applying two actions in
one order and in the other.

Group elements are compared up to Frobenius distance 1e-8 and global phases
are NOT identified, so -I and I are distinct elements.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .bellman import sequence_q
from .environment import ActionUnitary, EnvironmentSpec
from .linalg import ShapeError
from .statevector import StateVector

COMMUTING_TOL = 1e-10
ELEMENT_TOL = 1e-8
DEFAULT_GROUP_CAP = 512


def _square_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = linalg.as_matrix(a, name="a"), linalg.as_matrix(b, name="b")
    if a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ShapeError(f"commutator needs equal square operands, got {a.shape} and {b.shape}")
    return a, b


def commutator(a, b) -> np.ndarray:
    a, b = _square_pair(a, b)
    return a @ b - b @ a


def degree(a, b) -> tuple[float, float]:
    """(||[a,b]||_F, ||[a,b]||_F / (||a||_F ||b||_F)); the normalized value is <= 2."""
    a, b = _square_pair(a, b)
    na, nb = linalg.frobenius_norm(a), linalg.frobenius_norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("normalized degree undefined for a zero-norm operand")
    raw = linalg.frobenius_norm(a @ b - b @ a)
    return raw, raw / (na * nb)


@dataclass
class NoncommReport:
    names: list[str]
    raw: np.ndarray
    pairwise: np.ndarray  # normalized degrees
    commuting_pairs: list[tuple[int, int]]

    @property
    def max_degree(self) -> float:
        return float(self.pairwise.max())

    def rows(self):
        """(i, j, name_i, name_j, raw, normalized) for every unordered pair i < j."""
        n = len(self.names)
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j, self.names[i], self.names[j], float(self.raw[i, j]), float(self.pairwise[i, j])


def _matrices(actions, num_qubits: int | None) -> tuple[list[str], list[np.ndarray]]:
    names, mats = [], []
    for k, a in enumerate(actions):
        if isinstance(a, ActionUnitary):
            names.append(a.name)
            if a.targets is None:
                mats.append(a.matrix)
            else:
                if num_qubits is None:
                    raise ValueError(f"action {a.name!r} acts on selected qubits; pass num_qubits")
                mats.append(a.full_matrix(num_qubits))
        else:
            names.append(str(k))
            mats.append(linalg.as_matrix(a))
    return names, mats


def pairwise_report(actions: Sequence, num_qubits: int | None = None) -> NoncommReport:
    names, mats = _matrices(actions, num_qubits)
    if not mats:
        raise ValueError("need at least one action")
    n = len(mats)
    raw, norm = np.zeros((n, n)), np.zeros((n, n))
    commuting = []
    for i in range(n):
        for j in range(i + 1, n):
            r, d = degree(mats[i], mats[j])
            raw[i, j] = raw[j, i] = r
            norm[i, j] = norm[j, i] = d
            if r <= COMMUTING_TOL:
                commuting.append((i, j))
    return NoncommReport(names, raw, norm, commuting)


class _ElementSet:
    """Matrices deduplicated by minimal Frobenius distance."""

    def __init__(self, dim: int, tol: float = ELEMENT_TOL):
        self.tol = tol
        self.items: list[np.ndarray] = []
        self._buf = np.zeros((16, dim, dim), dtype=complex)

    def __len__(self):
        return len(self.items)

    def index(self, m: np.ndarray) -> int | None:
        n = len(self.items)
        if n == 0:
            return None
        d = np.sqrt(np.sum(np.abs(self._buf[:n] - m) ** 2, axis=(1, 2)))
        k = int(np.argmin(d))
        return k if d[k] < self.tol else None

    def add(self, m: np.ndarray) -> bool:
        if self.index(m) is not None:
            return False
        n = len(self.items)
        if n == self._buf.shape[0]:
            self._buf = np.concatenate([self._buf, np.zeros_like(self._buf)])
        self._buf[n] = m
        self.items.append(m)
        return True


@dataclass
class FiniteGroupClosure:
    elements: list[np.ndarray]
    generated_from: list[str]
    is_closed: bool
    cap: int = DEFAULT_GROUP_CAP

    def __len__(self) -> int:
        return len(self.elements)

    def contains(self, m, tol: float = ELEMENT_TOL) -> bool:
        m = linalg.as_matrix(m)
        return any(linalg.frobenius_norm(e - m) < tol for e in self.elements)

    def summary(self) -> dict:
        return {"generated_from": list(self.generated_from), "size": len(self.elements),
                "is_closed": self.is_closed, "cap": self.cap}


def group_closure(generators: Sequence, cap: int = DEFAULT_GROUP_CAP,
                  names: Sequence[str] | None = None) -> FiniteGroupClosure:
    """Breadth-first closure of unitary generators under multiplication.

    For a finite group the products of generators already contain every
    inverse. Stops with ``is_closed=False`` once more than ``cap`` elements
    would be needed.
    """
    gens = [linalg.require_unitary(getattr(g, "matrix", g), name="generator") for g in generators]
    if names is None:
        names = [getattr(g, "name", str(k)) for k, g in enumerate(generators)]
    dim = gens[0].shape[0] if gens else 1
    if any(g.shape[0] != dim for g in gens):
        raise ShapeError("generators have differing dimensions")
    found = _ElementSet(dim)
    found.add(np.eye(dim, dtype=complex))
    frontier = [found.items[0]]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                p = e @ g
                if found.index(p) is None:
                    if len(found) >= cap:
                        return FiniteGroupClosure(list(found.items), list(names), False, cap)
                    found.add(p)
                    nxt.append(p)
        frontier = nxt
    return FiniteGroupClosure(list(found.items), list(names), True, cap)


def commutator_subgroup(closure: FiniteGroupClosure, cap: int | None = None) -> FiniteGroupClosure:
    """Subgroup generated by every group commutator g h g^-1 h^-1."""
    if not closure.is_closed:
        raise ValueError("commutator subgroup needs a closed group (cap was hit)")
    els = np.array(closure.elements)
    dim = els.shape[1]
    inv = els.conj().transpose(0, 2, 1)
    comms = _ElementSet(dim)
    for g, g_inv in zip(els, inv):
        # g h g^-1 h^-1 for every h at once
        batch = g @ els @ g_inv @ inv
        for c in batch:
            comms.add(c)
    label = f"[G,G] of <{','.join(closure.generated_from)}>"
    return group_closure(comms.items, cap if cap is not None else closure.cap, names=[label])


def is_abelian(closure: FiniteGroupClosure, tol: float = ELEMENT_TOL) -> bool:
    els = closure.elements
    return all(linalg.frobenius_norm(a @ b - b @ a) < tol for a in els for b in els)


def order_sensitivity(env: EnvironmentSpec, psi: StateVector, a: int, b: int) -> float:
    """|Q(psi, [U_a, U_b]) - Q(psi, [U_b, U_a])| with Q the sequence reward expectation."""
    if env.noise_p > 0.0:
        raise ValueError("order sensitivity needs a noiseless environment")
    for i in (a, b):
        if not 0 <= i < env.n_actions:
            raise IndexError(f"action index {i} out of range (have {env.n_actions})")
    if a == b:
        return 0.0
    ua, ub = env.actions[a], env.actions[b]
    return abs(sequence_q(psi, [ua, ub], env.reward) - sequence_q(psi, [ub, ua], env.reward))
