"""Rényi entropies and the overlap bound for pairs of testers.

For testers ``T1``, ``T2`` on channels ``A -> B`` and orders with
``1/alpha + 1/beta = 2``:

    H_alpha(p/d_A (+) (d_A-1)/d_A) + H_beta(q/d_A (+) (d_A-1)/d_A) >= -2 log c(T1, T2)

The padded vectors are the statistics of the extended effects on the
normalized Choi state ``J / d_A``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tester as tst
from .channels import QuantumChannel, validate_cptp
from .errors import ValidationError
from .sdp import SdpResult, hmin_exp_dual, hmin_exp_primal, hmin_normalized_identity_check  # noqa: F401

PROB_CLIP = 1e-10
TOTAL_TOL = 1e-8
HARMONIC_TOL = 1e-12


def as_order(alpha) -> float:
    """Parse a Rényi order; accepts ``inf``/``"inf"``."""
    if isinstance(alpha, str):
        alpha = float(alpha.strip().lower().replace("infinity", "inf"))
    alpha = float(alpha)
    if math.isnan(alpha) or alpha < 0:
        raise ValueError(f"Rényi order must be >= 0, got {alpha}")
    return alpha


def check_prob_vector(p, total: float = 1.0, tol: float = TOTAL_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size and p.min() < -PROB_CLIP:
        raise ValidationError(f"negative probability {p.min()!r}")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - total) > tol:
        raise ValidationError(f"entries sum to {p.sum()!r}, expected {total}")
    return p


def _log(x, base):
    return np.log(x) / np.log(base)


def renyi_entropy(p, alpha, base: float = 2) -> float:
    """(1/(1-alpha)) log sum p^alpha, with the Shannon, min- and max-entropy limits.

    Works on any nonnegative vector; the total is not renormalized, which is
    what the Schur-concave evaluation of unnormalized bounds needs.
    """
    alpha = as_order(alpha)
    p = np.clip(np.asarray(p, dtype=float).reshape(-1), 0.0, None)
    nz = p[p > 0]
    if nz.size == 0:
        return 0.0
    if alpha == 0:
        return float(_log(nz.size, base))
    if alpha == 1:
        return float(-np.sum(nz * _log(nz, base)))
    if math.isinf(alpha):
        return float(-_log(nz.max(), base))
    return float(_log(np.sum(nz ** alpha), base) / (1 - alpha))


def shannon_entropy(p, base: float = 2) -> float:
    return renyi_entropy(p, 1, base)


def check_harmonic(alpha, beta, tol: float = HARMONIC_TOL) -> tuple[float, float]:
    a, b = as_order(alpha), as_order(beta)
    if a == 0 or b == 0:
        raise ValueError("orders in a harmonic pair must be positive")
    if abs(1 / a + 1 / b - 2) > tol:
        raise ValueError(f"(alpha, beta) = ({a}, {b}) violates 1/alpha + 1/beta = 2")
    return a, b


def padded(p, d_a: int) -> np.ndarray:
    """p / d_A with the extra entry (d_A - 1)/d_A appended."""
    p = np.asarray(p, dtype=float)
    return np.append(p / d_a, (d_a - 1) / d_a)


def mu_bound(overlap: float, base: float = 2) -> float:
    """-2 log c, the tester-only side of the relation."""
    if overlap <= 0:
        return math.inf
    return float(-2 * _log(overlap, base))


@dataclass
class MuReport:
    alpha: float
    beta: float
    lhs: float
    rhs: float
    slack: float
    overlap: float
    p_padded: np.ndarray
    q_padded: np.ndarray

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "overlap": self.overlap,
        }


def mu_relation_from_probs(p, q, d_a: int, overlap: float, alpha, beta, base: float = 2) -> MuReport:
    a, b = check_harmonic(alpha, beta)
    pp, qq = padded(p, d_a), padded(q, d_a)
    lhs = renyi_entropy(pp, a, base) + renyi_entropy(qq, b, base)
    rhs = mu_bound(overlap, base)
    return MuReport(a, b, lhs, rhs, lhs - rhs, overlap, pp, qq)


def mu_relation(t1, t2, channel: QuantumChannel, alpha, beta, base: float = 2,
                overlap: Optional[float] = None, exclude_complement: bool = False) -> MuReport:
    """Evaluate both sides of the Rényi overlap relation on one channel.

    Pass a precomputed ``overlap`` to skip rebuilding the overlap table.
    """
    check_harmonic(alpha, beta)
    rep = validate_cptp(channel)
    if not rep.ok:
        raise ValidationError(f"channel is not CPTP (cp {rep.cp_residual:.3e}, tp {rep.tp_residual:.3e})")
    if overlap is None:
        overlap = tst.overlap_table(t1, t2, exclude_complement).max_overlap
    b1 = t1.base if isinstance(t1, tst.ExtendedTester) else t1
    b2 = t2.base if isinstance(t2, tst.ExtendedTester) else t2
    p = tst.probabilities(b1, channel)
    q = tst.probabilities(b2, channel)
    return mu_relation_from_probs(p, q, b1.d_A, overlap, alpha, beta, base)
