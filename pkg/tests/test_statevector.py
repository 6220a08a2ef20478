import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from naqrl.linalg import ShapeError
from naqrl.rng import make_rng
from naqrl.statevector import (CNOT, H, I2, X, Y, Z, GateSpec, StateVector, apply_gate, apply_gates,
                               basis_state, embed, expectation, fidelity, measure_computational,
                               sample_leading)

from conftest import SQ2, random_state, random_unitary


def bits(i, n):
    return [(i >> (n - 1 - q)) & 1 for q in range(n)]


def embed_by_indices(u, targets, n):
    """Full matrix of a gate on ``targets``: entry-by-entry from basis bit strings."""
    dim, k = 2**n, len(targets)
    out = np.zeros((dim, dim), dtype=complex)
    rest = [q for q in range(n) if q not in targets]
    for i in range(dim):
        bi = bits(i, n)
        for j in range(dim):
            bj = bits(j, n)
            if any(bi[q] != bj[q] for q in rest):
                continue
            si = int("".join(str(bi[t]) for t in targets), 2)
            sj = int("".join(str(bj[t]) for t in targets), 2)
            out[i, j] = u[si, sj]
    assert k == len(targets)
    return out


def test_basis_state_examples():
    np.testing.assert_array_equal(basis_state(1, 0).amplitudes, [1, 0])
    np.testing.assert_array_equal(basis_state(2, 2).amplitudes, [0, 0, 1, 0])
    assert basis_state(3, 7).amplitudes[7] == 1
    with pytest.raises(IndexError):
        basis_state(2, 4)


def test_hadamard_on_zero():
    out = apply_gate(basis_state(1, 0), GateSpec("H", (0,)))
    np.testing.assert_allclose(out.amplitudes, [SQ2, SQ2], atol=1e-12)


def test_cnot_worked_examples():
    cnot = GateSpec("CNOT", (0, 1))
    np.testing.assert_array_equal(apply_gate(basis_state(2, 0b00), cnot).amplitudes, basis_state(2, 0b00).amplitudes)
    np.testing.assert_array_equal(apply_gate(basis_state(2, 0b10), cnot).amplitudes, basis_state(2, 0b11).amplitudes)


def test_gate_spec_validation():
    with pytest.raises(ValueError, match="distinct"):
        GateSpec("CNOT", (1, 1))
    with pytest.raises(ValueError, match="acts on 1"):
        GateSpec("H", (0, 1))
    with pytest.raises(ValueError, match="angle"):
        GateSpec("R", (0,))
    with pytest.raises(IndexError):
        apply_gate(basis_state(2, 0), GateSpec("X", (2,)))
    with pytest.raises(ValueError, match="not unitary"):
        apply_gate(basis_state(1, 0), GateSpec("Custom", (0,), custom_matrix=np.array([[1, 1], [0, 1]])))


def test_embed_matches_kron_for_ordered_targets():
    np.testing.assert_allclose(embed(H, (0,), 2), np.kron(H, I2))
    np.testing.assert_allclose(embed(X, (1,), 3), np.kron(np.kron(I2, X), I2))
    np.testing.assert_allclose(embed(CNOT, (0, 1), 2), CNOT)


@pytest.mark.parametrize("n", [2, 3])
def test_local_contraction_matches_full_matrix(n, rng):
    for _ in range(40):
        k = int(rng.integers(1, n + 1))
        targets = tuple(int(t) for t in rng.permutation(n)[:k])
        u = random_unitary(2**k, rng)
        psi = random_state(n, rng)
        got = apply_gate(psi, GateSpec("Custom", targets, custom_matrix=u)).amplitudes
        want = embed_by_indices(u, targets, n) @ psi.amplitudes
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_named_gates_match_full_matrix_on_four_qubits(rng):
    psi = random_state(4, rng)
    for spec in [GateSpec("CNOT", (3, 1)), GateSpec("CR", (2, 0), 0.4), GateSpec("Y", (2,)), GateSpec("R", (1,), -1.2)]:
        want = embed_by_indices(spec.matrix(), spec.targets, 4) @ psi.amplitudes
        np.testing.assert_allclose(apply_gate(psi, spec).amplitudes, want, atol=1e-12)


def test_order_sensitivity_of_h_and_cnot():
    zero = basis_state(2, 0)
    h, cx = GateSpec("H", (0,)), GateSpec("CNOT", (0, 1))
    a = apply_gates(zero, [h, cx])
    b = apply_gates(zero, [cx, h])
    # (|00>+|11>)/sqrt2 against (|00>+|10>)/sqrt2
    assert fidelity(a, b) == pytest.approx(0.25, abs=1e-12)


def test_measure_deterministic_state():
    out, collapsed, p = measure_computational(basis_state(1, 0), make_rng(1))
    assert (out, p) == (0, 1.0)
    assert fidelity(collapsed, basis_state(1, 0)) == 1.0


def test_measure_plus_probabilities(plus):
    for seed in range(20):
        out, collapsed, p = measure_computational(plus, make_rng(seed))
        assert out in (0, 1)
        assert p == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_array_equal(collapsed.amplitudes, basis_state(1, out).amplitudes)


def test_measure_frequency_and_reproducibility(plus):
    n = 100_000
    rng = make_rng(7)
    seq = [measure_computational(plus, rng)[0] for _ in range(n)]
    freq = seq.count(0) / n
    # binomial sd is 0.0016; 0.01 is > 6 sd
    assert abs(freq - 0.5) <= 0.01
    rng2 = make_rng(7)
    assert seq[:1000] == [measure_computational(plus, rng2)[0] for _ in range(1000)]


def test_sample_leading_marginal():
    # |psi> = (|00> + |01> + |10>)/sqrt3: leading qubit reads 0 with prob 2/3
    psi = StateVector(np.array([1, 1, 1, 0]) / math.sqrt(3))
    rng = make_rng(3)
    n = 30_000
    zeros = sum(sample_leading(psi, 1, rng) == 0 for _ in range(n))
    assert abs(zeros / n - 2 / 3) < 0.015
    assert sample_leading(psi, 0, rng) == 0


def test_expectation_examples(plus):
    assert expectation(basis_state(1, 0), Z) == 1.0
    assert expectation(plus, Z) == pytest.approx(0.0, abs=1e-15)
    assert expectation(basis_state(2, 3), np.kron(Z, Z)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ShapeError):
        expectation(plus, np.eye(4))
    with pytest.raises(ValueError, match="Hermitian"):
        expectation(plus, np.array([[0, 1], [0, 0]]))


def test_fidelity_examples(plus, rng):
    psi = random_state(3, rng)
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(basis_state(1, 0), basis_state(1, 1)) == 0.0
    assert fidelity(basis_state(1, 0), plus) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ShapeError):
        fidelity(plus, basis_state(2, 0))


def test_state_rejects_unnormalized():
    with pytest.raises(ValueError, match="normalized"):
        StateVector([1, 1])
    with pytest.raises(AttributeError):
        basis_state(1, 0).num_qubits = 2
    with pytest.raises(ValueError):
        basis_state(1, 0).amplitudes[0] = 0


def test_state_and_gate_json_roundtrip(rng):
    psi = random_state(2, rng)
    back = StateVector.from_json(psi.to_json())
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)
    gates = [GateSpec("H", (0,)), GateSpec("CR", (0, 1), 0.25)]
    assert [GateSpec.from_json(g.to_json()) for g in gates] == gates
    assert gates[1].to_json() == {"kind": "CR", "targets": [0, 1], "param": 0.25}


gate_strategy = st.one_of(
    st.builds(lambda k, q: (k, (q,), None), st.sampled_from(["H", "X", "Y", "Z"]), st.integers(0, 5)),
    st.builds(lambda q, t: ("R", (q,), t), st.integers(0, 5), st.floats(-10, 10)),
    st.builds(lambda qs, t: ("CR", tuple(qs), t), st.lists(st.integers(0, 5), min_size=2, max_size=2, unique=True),
              st.floats(-10, 10)),
    st.builds(lambda qs: ("CNOT", tuple(qs), None), st.lists(st.integers(0, 5), min_size=2, max_size=2, unique=True)),
)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.lists(gate_strategy, max_size=100), st.integers(0, 2**32))
def test_norm_preserved_over_gate_sequences(n, gates, seed):
    state = random_state(n, np.random.default_rng(seed))
    for kind, targets, param in gates:
        targets = tuple(t % n for t in targets)
        if len(set(targets)) != len(targets):
            continue
        state = apply_gate(state, GateSpec(kind, targets, param))
    assert abs(state.norm() - 1.0) <= 1e-9


def test_pauli_matrices_unitary():
    for m in (X, Y, Z, H, CNOT):
        np.testing.assert_allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=1e-15)
