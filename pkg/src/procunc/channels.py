"""Quantum channels in Kraus and Choi form, plus states and POVMs.

Choi convention: ``J = sum_ij |i><j| (x) Psi(|i><j|)`` with the input factor
first, i.e. ``J = (1 (x) Psi)(phi_+)`` for the unnormalized ``phi_+``.
Trace preservation then reads ``Tr_B J = 1_A`` and ``Tr J = d_A``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .opalg import (
    PSD_TOL,
    as_matrix,
    check_dims,
    dag,
    hermitian_part,
    identity,
    max_abs,
    min_eig,
    partial_trace,
    max_eig,
)

CHOI_TOL = 1e-8
TRACE_TOL = 1e-9


def choi_from_kraus(kraus: Sequence[np.ndarray], d_in: int, d_out: int) -> np.ndarray:
    kraus = [as_matrix(k) for k in kraus]
    for k in kraus:
        if k.shape != (d_out, d_in):
            raise DimensionError(f"Kraus operator of shape {k.shape}, expected {(d_out, d_in)}")
    tp = sum(dag(k) @ k for k in kraus)
    if max_abs(tp - identity(d_in)) > CHOI_TOL:
        raise ValidationError(
            f"Kraus set is not trace preserving: ||sum K^dag K - 1|| = {max_abs(tp - identity(d_in)):.3e}"
        )
    # |K>> = sum_i |i> (x) K|i>, whose row-major components are K.T flattened
    vecs = np.array([k.T.reshape(-1) for k in kraus])
    return hermitian_part(vecs.T @ vecs.conj())


def kraus_from_choi(choi: np.ndarray, d_in: int, d_out: int, tol: float = 1e-12) -> list[np.ndarray]:
    """Canonical Kraus operators from the eigendecomposition of a Choi matrix."""
    w, v = np.linalg.eigh(hermitian_part(as_matrix(choi)))
    if w[0] < -PSD_TOL:
        raise ValidationError(f"Choi matrix is not PSD: min eigenvalue {w[0]:.3e}")
    kraus = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= tol:
            break
        kraus.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return kraus


def apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(k @ rho @ dag(k) for k in kraus)


def apply_choi(choi: np.ndarray, rho: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Psi(X) = Tr_A[(X^T (x) 1_B) J]."""
    j = choi.reshape(d_in, d_out, d_in, d_out)
    return np.einsum("ij,ibja->ba", rho, j)


@dataclass
class QuantumChannel:
    """A channel A -> B held as Kraus operators and/or a Choi matrix.

    The Choi matrix is derived from the Kraus list when only the latter is
    supplied, so ``choi`` is always populated after construction.
    """

    d_in: int
    d_out: int
    kraus: Optional[list] = None
    choi: Optional[np.ndarray] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kraus is None and self.choi is None:
            raise ValidationError("a channel needs Kraus operators or a Choi matrix")
        if self.kraus is not None:
            self.kraus = [as_matrix(k) for k in self.kraus]
            from_kraus = choi_from_kraus(self.kraus, self.d_in, self.d_out)
            if self.choi is None:
                self.choi = from_kraus
            else:
                self.choi = as_matrix(self.choi)
                check_dims(self.choi, (self.d_in, self.d_out))
                if max_abs(self.choi - from_kraus) > CHOI_TOL:
                    raise ValidationError("Kraus and Choi representations disagree")
        else:
            self.choi = as_matrix(self.choi)
            check_dims(self.choi, (self.d_in, self.d_out))

    @property
    def dims(self) -> tuple[int, int]:
        return (self.d_in, self.d_out)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


@dataclass
class CptpReport:
    ok: bool
    cp_residual: float
    tp_residual: float
    hermiticity_residual: float
    trace: float

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "cp_residual": self.cp_residual,
            "tp_residual": self.tp_residual,
            "hermiticity_residual": self.hermiticity_residual,
            "trace": self.trace,
        }


def validate_cptp(channel: QuantumChannel, psd_tol: float = PSD_TOL, tp_tol: float = CHOI_TOL) -> CptpReport:
    """Report CP (min eigenvalue of J) and TP (||Tr_B J - 1||_max) residuals.

    Never raises on a bad channel; ``ok`` carries the verdict.
    """
    j = channel.choi
    herm = max_abs(j - dag(j))
    cp = min_eig(j)
    tp = max_abs(partial_trace(j, channel.dims, 0) - identity(channel.d_in))
    ok = herm <= 1e-10 and cp >= -psd_tol and tp <= tp_tol
    return CptpReport(ok, cp, tp, herm, float(np.trace(j).real))


def apply(channel: QuantumChannel, rho) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (channel.d_in, channel.d_in):
        raise DimensionError(f"state of shape {rho.shape} does not fit channel input {channel.d_in}")
    out = apply_choi(channel.choi, rho, channel.d_in, channel.d_out)
    if channel.kraus is not None:
        direct = apply_kraus(channel.kraus, rho)
        if max_abs(out - direct) > CHOI_TOL:
            raise ValidationError("Choi and Kraus evaluation disagree")
    return hermitian_part(out)


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel(d, d, kraus=[identity(d)], name="identity")


def state_prep_channel(rho) -> QuantumChannel:
    """The preparation map C -> H whose Choi matrix is rho itself."""
    rho = check_density(rho)
    return QuantumChannel(1, rho.shape[0], choi=rho, name="state_prep")


# -- states ----------------------------------------------------------------

def check_density(rho, tol: float = PSD_TOL) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density operator must be square, got {rho.shape}")
    if max_abs(rho - dag(rho)) > 1e-10:
        raise ValidationError("density operator is not Hermitian")
    lam = min_eig(rho)
    if lam < -tol:
        raise ValidationError(f"density operator is not PSD: min eigenvalue {lam:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL:
        raise ValidationError(f"density operator has trace {tr!r}")
    return hermitian_part(rho)


def density_residuals(rho) -> dict:
    rho = as_matrix(rho)
    return {
        "hermiticity_residual": max_abs(rho - dag(rho)),
        "min_eig": min_eig(rho),
        "trace_residual": float(abs(np.trace(rho).real - 1)),
    }


# -- POVMs -----------------------------------------------------------------

@dataclass
class Povm:
    dims: tuple
    effects: list
    name: str = field(default="", compare=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.effects = [as_matrix(e) for e in self.effects]
        for e in self.effects:
            check_dims(e, self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.effects)


def povm_residuals(povm: Povm) -> dict:
    effects = povm.effects
    return {
        "hermiticity_residual": max(max_abs(e - dag(e)) for e in effects),
        "min_eig": min(min_eig(e) for e in effects),
        "max_eig": max(max_eig(e) for e in effects),
        "completeness_residual": max_abs(sum(effects) - identity(povm.dim)),
    }


def validate_povm(povm: Povm, psd_tol: float = PSD_TOL, tol: float = CHOI_TOL) -> Povm:
    if not povm.effects:
        raise ValidationError("POVM has no effects")
    r = povm_residuals(povm)
    if r["hermiticity_residual"] > 1e-10:
        raise ValidationError("POVM effect is not Hermitian")
    if r["min_eig"] < -psd_tol or r["max_eig"] > 1 + psd_tol:
        raise ValidationError(f"POVM effect outside [0, 1]: eigenvalues in [{r['min_eig']:.3e}, {r['max_eig']:.3e}]")
    if r["completeness_residual"] > tol:
        raise ValidationError(f"POVM effects do not sum to identity (residual {r['completeness_residual']:.3e})")
    povm.effects = [hermitian_part(e) for e in povm.effects]
    return povm


def basis_povm(vectors: Sequence[np.ndarray], dims=None) -> Povm:
    """Rank-one projective measurement onto the columns of an orthonormal set."""
    effects = [np.outer(v, np.conj(v)) for v in vectors]
    n = len(effects[0])
    return Povm(dims or (n,), effects)


def computational_povm(d: int) -> Povm:
    return basis_povm(list(identity(d)))


def fourier_povm(d: int) -> Povm:
    w = np.exp(2j * np.pi / d)
    vecs = [np.array([w ** (j * k) for j in range(d)]) / np.sqrt(d) for k in range(d)]
    return basis_povm(vecs)


# -- random sampling -------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_isometry(d_in: int, d_out: int, seed=None) -> np.ndarray:
    """Haar-random isometry C^d_in -> C^d_out via QR of a Ginibre matrix."""
    if d_out < d_in:
        raise DimensionError(f"no isometry from dimension {d_in} into {d_out}")
    rng = _rng(seed)
    z = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(z)
    # fix column phases so the distribution is exactly Haar
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_unitary(d: int, seed=None) -> np.ndarray:
    return random_isometry(d, d, seed)


def random_cptp(d_in: int, d_out: int, env_dim: Optional[int] = None, seed=None) -> QuantumChannel:
    """Stinespring channel Psi(X) = Tr_E[V X V^dag] with Haar isometry V: A -> B (x) E."""
    env_dim = d_in * d_out if env_dim is None else env_dim
    if env_dim < 1:
        raise ValueError("env_dim must be >= 1")
    n = d_out * env_dim
    if n >= d_in:
        v = random_isometry(d_in, n, seed)
    else:
        raise DimensionError(f"d_out * env_dim = {n} < d_in = {d_in}: no isometry exists")
    v = v.reshape(d_out, env_dim, d_in)
    kraus = [v[:, e, :] for e in range(env_dim)]
    return QuantumChannel(d_in, d_out, kraus=kraus, name="random")


def random_density(d: int, seed=None, rank: Optional[int] = None) -> np.ndarray:
    """Random density matrix from the induced (Hilbert-Schmidt for full rank) measure."""
    rng = _rng(seed)
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ dag(g)
    return hermitian_part(rho / np.trace(rho).real)


def random_pure_state(d: int, seed=None) -> np.ndarray:
    return random_density(d, seed, rank=1)


def random_povm(d: int, outcomes: int, seed=None, dims=None) -> Povm:
    """Random POVM: Wishart-distributed positives normalized by S^{-1/2} . S^{-1/2}."""
    from .opalg import inv_sqrt

    rng = _rng(seed)
    gs = []
    for _ in range(outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        gs.append(g @ dag(g))
    s = inv_sqrt(sum(gs))
    return Povm(dims or (d,), [hermitian_part(s @ g @ s) for g in gs])
