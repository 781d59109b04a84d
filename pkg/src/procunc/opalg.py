"""Dense complex operator algebra on tensor-product spaces.

Multi-system operators are plain ``numpy`` arrays paired with a ``dims``
sequence listing the subsystem dimensions in Kronecker (row-major) order.
Across the package the global factor order is (R, A, B).
"""
from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError, NotPSDError

HERM_TOL = 1e-10
PSD_TOL = 1e-9


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + dag(a)) / 2


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and float(np.max(np.abs(a - dag(a)))) <= tol


def check_dims(op: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dims must be positive, got {dims}")
    n = int(np.prod(dims))
    if op.ndim != 2 or op.shape != (n, n):
        raise DimensionError(f"operator of shape {op.shape} does not match dims {dims}")
    return dims


def tensor(*ops) -> np.ndarray:
    """Kronecker product of the arguments, left to right."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def partial_trace(op, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem whose index is not in ``keep``.

    ``keep`` may be an int or an iterable of subsystem indices; kept factors
    stay in their original relative order.
    """
    op = np.asarray(op, dtype=complex)
    dims = check_dims(op, dims)
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    t = op.reshape(dims + dims)
    # einsum labels: row index i_k, column index j_k; traced factors share a label
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    rows = list(letters[:n])
    cols = [letters[n + k] if k in keep else letters[k] for k in range(n)]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return res.reshape(dk, dk)


def partial_transpose(op, dims: Sequence[int], target) -> np.ndarray:
    """Transpose the indices of the ``target`` factor(s) only."""
    op = np.asarray(op, dtype=complex)
    dims = check_dims(op, dims)
    targets = {target} if isinstance(target, (int, np.integer)) else set(target)
    n = len(dims)
    if any(k < 0 or k >= n for k in targets):
        raise DimensionError(f"target {target} out of range for {n} subsystems")
    t = op.reshape(dims + dims)
    axes = list(range(2 * n))
    for k in targets:
        axes[k], axes[n + k] = axes[n + k], axes[k]
    return t.transpose(axes).reshape(op.shape)


def permute_systems(op, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``i`` is input factor ``perm[i]``."""
    op = np.asarray(op, dtype=complex)
    dims = check_dims(op, dims)
    n = len(dims)
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{perm} is not a permutation of {n} subsystems")
    t = op.reshape(dims + dims)
    return t.transpose(perm + [n + p for p in perm]).reshape(op.shape)


def eigh_clipped(op, tol: float = PSD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD operator with round-off negatives set to 0."""
    a = hermitian_part(as_matrix(op))
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise NotPSDError(f"operator is not PSD: min eigenvalue {w[0]:.3e}")
    return np.clip(w, 0.0, None), v


def psd_sqrt(op, tol: float = PSD_TOL) -> np.ndarray:
    w, v = eigh_clipped(op, tol)
    return hermitian_part((v * np.sqrt(w)) @ dag(v))


def psd_clip(op, tol: float = PSD_TOL) -> np.ndarray:
    """Return ``op`` with eigenvalues in (-tol, 0) set to zero."""
    w, v = eigh_clipped(op, tol)
    return hermitian_part((v * w) @ dag(v))


def inv_sqrt(op, floor: float = 1e-14) -> np.ndarray:
    """Inverse square root of a positive definite operator."""
    w, v = np.linalg.eigh(hermitian_part(as_matrix(op)))
    if w[0] <= floor:
        raise NotPSDError(f"operator is singular or indefinite: min eigenvalue {w[0]:.3e}")
    return hermitian_part((v / np.sqrt(w)) @ dag(v))


def operator_norm(op) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_matrix(op), 2))


def max_eig(op) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(as_matrix(op)))[-1])


def min_eig(op) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(as_matrix(op)))[0])


def max_abs(a) -> float:
    return float(np.max(np.abs(a)))


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def phi_plus(d: int) -> np.ndarray:
    """Unnormalized maximally entangled operator sum_ij |ii><jj| (trace d)."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1
    return proj(v)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
