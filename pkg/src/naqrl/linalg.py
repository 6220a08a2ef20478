"""Dense complex linear algebra helpers.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``; vectors are
1-D arrays. The helpers here add the shape and finiteness checks the rest of
the package relies on, plus the Hermitian matrix exponential used to turn a
Hamiltonian into a unitary step (hbar = 1).
"""
from __future__ import annotations

import numpy as np

UNITARY_TOL = 1e-9
HERMITIAN_TOL = 1e-10
KRON_DIM_CAP = 2**12
EXPM_DIM_CAP = 2**6


class ShapeError(ValueError):
    """Raised when operand dimensions do not fit together."""


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""


def as_matrix(a, *, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite complex 2-D array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"{name}: expected a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a, name="a"), as_matrix(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: a is {a.shape[0]}x{a.shape[1]}, b is {b.shape[0]}x{b.shape[1]}")
    return a @ b


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T


def kron(a, b, *, cap: int = KRON_DIM_CAP) -> np.ndarray:
    a, b = as_matrix(a, name="a"), as_matrix(b, name="b")
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise ShapeError(f"kron: result {rows}x{cols} exceeds dimension cap {cap}")
    return np.kron(a, b)


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def hermitian_residual(a) -> float:
    """Largest entrywise deviation |a - a^dagger|."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return float("inf")
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_residual(a) <= tol


def unitarity_residual(u) -> float:
    """Frobenius distance of u^dagger u from the identity."""
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return float("inf")
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), "fro"))


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    return unitarity_residual(u) <= tol


def require_hermitian(a, tol: float = HERMITIAN_TOL, *, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name=name)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name}: Hermitian matrix must be square, got {a.shape}")
    resid = hermitian_residual(a)
    if resid > tol:
        raise NotHermitianError(f"{name}: not Hermitian, max |a - a^dagger| = {resid:.3e} > {tol:.0e}")
    return a


def require_unitary(u, tol: float = UNITARY_TOL, *, name: str = "matrix") -> np.ndarray:
    u = as_matrix(u, name=name)
    if u.shape[0] != u.shape[1]:
        raise ShapeError(f"{name}: unitary matrix must be square, got {u.shape}")
    resid = unitarity_residual(u)
    if resid > tol:
        raise ValueError(f"{name}: not unitary, ||u^dagger u - I||_F = {resid:.3e} > {tol:.0e}")
    return u


def expm_skew(h, t: float) -> np.ndarray:
    """Return exp(-i h t) for Hermitian ``h`` via its eigendecomposition."""
    h = require_hermitian(h, name="generator")
    if h.shape[0] > EXPM_DIM_CAP:
        raise ShapeError(f"expm_skew: dimension {h.shape[0]} exceeds dense cap {EXPM_DIM_CAP}")
    if not np.isfinite(t):
        raise ValueError("expm_skew: time must be finite")
    # symmetrize so eigh sees an exactly Hermitian input
    evals, evecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def matrix_from_json(obj: dict) -> np.ndarray:
    """Parse ``{"rows", "cols", "re", "im"}`` (flat row-major) into a matrix."""
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(obj["re"])), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix literal: {exc}") from exc
    if rows <= 0 or cols <= 0 or re.size != rows * cols or im.size != rows * cols:
        raise ShapeError(f"matrix literal: {rows}x{cols} needs {rows * cols} entries, "
                         f"got re={re.size}, im={im.size}")
    return as_matrix((re + 1j * im).reshape(rows, cols))


def matrix_to_json(a) -> dict:
    a = as_matrix(a)
    flat = a.reshape(-1)
    return {"rows": a.shape[0], "cols": a.shape[1],
            "re": [float(x) for x in flat.real], "im": [float(x) for x in flat.imag]}
