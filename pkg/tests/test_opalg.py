import numpy as np
import pytest

from procunc.errors import DimensionError, NotPSDError
from procunc.opalg import (
    PAULI_X,
    PAULI_Z,
    identity,
    max_eig,
    min_eig,
    operator_norm,
    partial_trace,
    partial_transpose,
    permute_systems,
    phi_plus,
    proj,
    psd_sqrt,
    tensor,
)

from conftest import random_herm, random_psd


def test_tensor_identity_and_projectors():
    assert np.array_equal(tensor(identity(2), identity(2)), identity(4))
    out = tensor(np.diag([1, 0]), np.diag([0, 1]))
    assert np.array_equal(out, np.diag([0, 1, 0, 0]))


def test_tensor_pauli_x_z_by_hand():
    # X (x) Z = [[0, Z], [Z, 0]] with Z = diag(1, -1)
    expected = np.array([
        [0, 0, 1, 0],
        [0, 0, 0, -1],
        [1, 0, 0, 0],
        [0, -1, 0, 0],
    ])
    assert np.array_equal(tensor(PAULI_X, PAULI_Z), expected)


def test_tensor_associative_on_exact_entries(rng):
    a, b, c = (rng.integers(-3, 4, size=(2, 2)) for _ in range(3))
    assert np.array_equal(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))
    assert np.array_equal(tensor(a, b, c), tensor(a, tensor(b, c)))
    # general floats round differently in the two groupings, so only closeness holds
    x, y, z = (rng.normal(size=(2, 2)) for _ in range(3))
    np.testing.assert_allclose(tensor(tensor(x, y), z), tensor(x, tensor(y, z)), rtol=1e-15, atol=0)


def _ptrace_oracle(op, d1, d2, keep_first):
    out = np.zeros((d1, d1) if keep_first else (d2, d2), dtype=complex)
    for i in range(d1):
        for j in range(d1):
            for k in range(d2):
                for l in range(d2):
                    v = op[i * d2 + k, j * d2 + l]
                    if keep_first and k == l:
                        out[i, j] += v
                    if not keep_first and i == j:
                        out[k, l] += v
    return out


def test_partial_trace_product_state(rng):
    rho, sigma = random_psd(rng, 3), random_psd(rng, 2)
    np.testing.assert_allclose(partial_trace(tensor(rho, sigma), [3, 2], 0), rho * np.trace(sigma), atol=1e-12)
    np.testing.assert_allclose(partial_trace(tensor(rho, sigma), [3, 2], 1), sigma * np.trace(rho), atol=1e-12)


def test_partial_trace_phi_plus():
    np.testing.assert_allclose(partial_trace(phi_plus(2), [2, 2], 0), identity(2), atol=1e-15)


def test_partial_trace_against_index_sum(rng):
    for d1, d2 in [(2, 2), (2, 3), (3, 2)]:
        a = random_herm(rng, d1 * d2)
        np.testing.assert_allclose(partial_trace(a, [d1, d2], 0), _ptrace_oracle(a, d1, d2, True), atol=1e-12)
        np.testing.assert_allclose(partial_trace(a, [d1, d2], 1), _ptrace_oracle(a, d1, d2, False), atol=1e-12)


def test_partial_trace_three_systems_keeps_order(rng):
    a, b, c = random_psd(rng, 2), random_psd(rng, 3), random_psd(rng, 2)
    out = partial_trace(tensor(a, b, c), [2, 3, 2], (0, 2))
    np.testing.assert_allclose(out, tensor(a, c) * np.trace(b), atol=1e-12)


def test_partial_trace_shape_errors():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 3], 0)
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 2], 5)


def test_partial_transpose_product_and_involution(rng):
    a, b = random_herm(rng, 2), random_herm(rng, 3)
    np.testing.assert_allclose(partial_transpose(tensor(a, b), [2, 3], 1), tensor(a, b.T), atol=1e-15)
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    assert np.array_equal(partial_transpose(partial_transpose(x, [2, 3], 0), [2, 3], 0), x)


def test_partial_transpose_phi_plus_is_swap():
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[i * 2 + j, j * 2 + i] = 1
    assert np.array_equal(partial_transpose(phi_plus(2), [2, 2], 0), swap)
    assert np.array_equal(partial_transpose(phi_plus(2), [2, 2], 1), swap)


def test_permute_systems_swaps_factors(rng):
    a, b, c = random_herm(rng, 2), random_herm(rng, 3), random_herm(rng, 2)
    out = permute_systems(tensor(a, b, c), [2, 3, 2], (2, 0, 1))
    np.testing.assert_allclose(out, tensor(c, a, b), atol=1e-14)


def test_psd_sqrt_cases(rng):
    np.testing.assert_allclose(psd_sqrt(identity(3)), identity(3), atol=1e-14)
    p = proj(np.array([1, 1j]) / np.sqrt(2))
    np.testing.assert_allclose(psd_sqrt(4 * p), 2 * p, atol=1e-14)
    for d in (2, 5, 16):
        a = random_psd(rng, d)
        s = psd_sqrt(a)
        assert min_eig(s) >= -1e-12
        assert np.max(np.abs(s @ s - a)) <= 1e-8


def test_psd_sqrt_clips_tiny_negatives_and_rejects_large():
    a = np.diag([1.0, -5e-10])
    np.testing.assert_allclose(psd_sqrt(a), np.diag([1.0, 0.0]))
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -1e-6]))


def test_operator_norm(rng):
    assert operator_norm(np.diag([0.3, -0.7])) == pytest.approx(0.7, abs=1e-15)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert operator_norm(q) == pytest.approx(1.0, abs=1e-12)
    a = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    oracle = np.sqrt(np.linalg.eigvalsh(a.conj().T @ a)[-1])
    assert operator_norm(a) == pytest.approx(oracle, rel=1e-12)


def test_max_and_min_eig(rng):
    assert max_eig(np.diag([1, 2, 3])) == pytest.approx(3)
    assert min_eig(np.diag([1, 2, 3])) == pytest.approx(1)
    assert max_eig(phi_plus(2)) == pytest.approx(2)
    a = random_herm(rng, 5)
    assert max_eig(a) >= np.max(np.diag(a).real) - 1e-12
