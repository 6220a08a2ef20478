"""Bundled invariant checks behind ``naqrl selftest``."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import linalg
from .bellman import StateRegistry, value_iteration
from .environment import ActionUnitary, EnvironmentSpec, Observable
from .noncomm import commutator_subgroup, group_closure
from .pqc import CircuitTemplate, Placement, finite_difference_gradient, gradient
from .rng import make_rng
from .statevector import (CNOT, I2, GateSpec, StateVector, X, Y, Z, apply_gate, basis_state,
                          controlled_rotation, hadamard, measure_computational, rotation)


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_gate(n: int, rng: np.random.Generator) -> GateSpec:
    kinds = ["H", "X", "Y", "Z", "R"] + (["CNOT", "CR"] if n > 1 else [])
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind in ("CNOT", "CR"):
        targets = tuple(int(t) for t in rng.choice(n, size=2, replace=False))
    else:
        targets = (int(rng.integers(n)),)
    return GateSpec(kind, targets, float(rng.uniform(-np.pi, np.pi)) if kind in ("R", "CR") else None)


def check_unitarity(rng) -> Check:
    mats = {"H": hadamard(), "X": X, "Y": Y, "Z": Z, "CNOT": CNOT,
            "R(0.7)": rotation(0.7), "CR(1.3)": controlled_rotation(1.3)}
    worst_name, worst = max(((k, linalg.unitarity_residual(m)) for k, m in mats.items()), key=lambda kv: kv[1])
    if worst > linalg.UNITARY_TOL:
        return Check("unitarity", False, f"{worst_name}: ||U^dag U - I||_F = {worst:.3e}")
    drift = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        state = basis_state(n, 0)
        for _ in range(int(rng.integers(1, 101))):
            state = apply_gate(state, _random_gate(n, rng))
        drift = max(drift, abs(state.norm() - 1.0))
    return Check("unitarity", drift <= 1e-9, f"gate residual {worst:.1e}, norm drift {drift:.1e}")


def check_born(rng) -> Check:
    plus = StateVector(np.array([1, 1]) / math.sqrt(2))
    n = 100_000
    zeros = sum(measure_computational(plus, rng)[0] == 0 for _ in range(n))
    freq = zeros / n
    return Check("born_frequencies", 0.49 <= freq <= 0.51, f"P(0) = {freq:.5f} over {n} shots")


def check_gradient(rng) -> Check:
    worst = 0.0
    for _ in range(5):
        tmpl = CircuitTemplate(2, (Placement("R", (0,), 0), Placement("R", (1,), 1), Placement("CNOT", (0, 1)),
                                   Placement("CR", (1, 0), 2), Placement("R", (0,), 3)), 4)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        obs = Observable(a + a.conj().T)
        th = rng.uniform(-np.pi, np.pi, size=4)
        worst = max(worst, float(np.max(np.abs(gradient(tmpl, th, obs) - finite_difference_gradient(tmpl, th, obs)))))
    return Check("gradient_shift_vs_fd", worst <= 1e-5, f"max |shift - fd| = {worst:.2e}")


def check_contraction(_rng) -> Check:
    env = EnvironmentSpec(1, (ActionUnitary("I", I2), ActionUnitary("X", X)), Observable(Z), 0.9)
    reg = StateRegistry()
    res = value_iteration(env, reg, tol=1e-10)
    q0 = res.q.get(reg.state_key(basis_state(1, 0)), 0)
    ratio = max(res.contraction_ratios())
    ok = abs(q0 - 10.0) <= 1e-4 and ratio <= 0.91
    return Check("bellman_contraction", ok, f"Q(|0>, I) = {q0:.8f}, max delta ratio {ratio:.6f}")


def check_pauli_group(_rng) -> Check:
    pauli = group_closure([X, Y, Z])
    derived = commutator_subgroup(pauli)
    minus_i = derived.contains(-np.eye(2))
    ok = pauli.is_closed and len(pauli) == 16 and len(derived) == 2 and minus_i
    return Check("pauli_group_closure", ok, f"|<X,Y,Z>| = {len(pauli)}, |[G,G]| = {len(derived)}")


CHECKS: list[Callable[[np.random.Generator], Check]] = [
    check_unitarity, check_born, check_gradient, check_contraction, check_pauli_group]


def selftest(seed: int = 0) -> list[Check]:
    results = []
    for fn, rng in zip(CHECKS, make_rng(seed).spawn(len(CHECKS))):
        try:
            results.append(fn(rng))
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            results.append(Check(fn.__name__.removeprefix("check_"), False, f"{type(exc).__name__}: {exc}"))
    return results


def format_table(results: list[Check]) -> str:
    width = max(len(c.name) for c in results)
    lines = [f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.detail}" for c in results]
    failed = [c.name for c in results if not c.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed"
                 + (f"; failed: {', '.join(failed)}" if failed else ""))
    return "\n".join(lines)
