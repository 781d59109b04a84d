"""The conditional min-entropy SDP pair.

For PSD ``W`` on A (x) B the value

    max { Tr[W J] : J >= 0, Tr_B J = 1_A }  =  min { Tr X : X (x) 1_B >= W }

equals ``2^{-H_min(B|A)_W}``: the largest weight any channel ``A -> B`` can
put on ``W``.

``hmin_exp_dual`` runs a dedicated log-barrier path-following method on the
minimization.  On the central path ``J = (X (x) 1 - W)^{-1} / t`` is a
strictly feasible primal point with gap ``d_A d_B / t``, so every solve
returns a certified bracket.  ``hmin_exp_primal`` solves the maximization
with a conic solver through cvxpy; the two routes share no code beyond the
certificate bookkeeping.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DimensionError, SolverError
from .opalg import (
    PSD_TOL,
    as_matrix,
    dag,
    hermitian_part,
    identity,
    inv_sqrt,
    min_eig,
    partial_trace,
    psd_clip,
    tensor,
)

GAP_TOL = 1e-6
FEAS_TOL = 1e-7

SOLVED = "solved"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SdpResult:
    """Outcome of one min-entropy SDP.

    ``value`` is ``2^{-H_min}``.  ``optimizer`` is X for the dual route and J
    for the primal route; the opposite variable is kept as ``certificate``.
    ``upper``/``lower`` bracket the true optimum using an exactly feasible
    dual X and an exactly CPTP primal J.
    """

    value: float
    optimizer: np.ndarray
    certificate: np.ndarray
    duality_gap: float
    feasibility_residual: float
    status: str
    upper: float
    lower: float
    route: str = ""
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def hmin(self) -> float:
        return math.inf if self.value <= 0 else -math.log2(self.value)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _clean_w(w, shape) -> tuple[np.ndarray, int, int]:
    w = as_matrix(w)
    d_a, d_b = (int(d) for d in shape)
    if w.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"W of shape {w.shape} does not match dims {(d_a, d_b)}")
    return psd_clip(w, PSD_TOL), d_a, d_b


def project_cptp(j: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """Nearby exactly-CPTP Choi matrix: clip negatives, then rescale Tr_B J to 1_A.

    The rescaling is the congruence ``(T^{-1/2} (x) 1) J (T^{-1/2} (x) 1)`` with
    ``T = Tr_B J``, which keeps positivity.
    """
    w, v = np.linalg.eigh(hermitian_part(j))
    j = (v * np.clip(w, 0, None)) @ dag(v)
    t = partial_trace(j, (d_a, d_b), 0)
    try:
        s = tensor(inv_sqrt(t), identity(d_b))
    except Exception:
        # degenerate certificate: fall back to the maximally mixing channel
        return np.eye(d_a * d_b, dtype=complex) / d_b
    return hermitian_part(s @ j @ s)


def lift_dual(x: np.ndarray, w: np.ndarray, d_b: int) -> tuple[np.ndarray, float]:
    """Shift X by a multiple of the identity until X (x) 1 >= W exactly.

    Returns the feasible X and the raw residual min eig(X (x) 1 - W).
    """
    x = hermitian_part(x)
    resid = min_eig(tensor(x, identity(d_b)) - w)
    if resid < 0:
        x = x + (-resid) * (1 + 1e-12) * identity(x.shape[0])
    return x, resid


def _status(gap: float, resid: float, gap_tol: float = GAP_TOL, feas_tol: float = FEAS_TOL) -> str:
    return SOLVED if gap <= gap_tol and resid >= -feas_tol else NUMERICAL_FAILURE


def _zero_result(d_a: int, d_b: int, route: str) -> SdpResult:
    j = np.eye(d_a * d_b, dtype=complex) / d_b
    x = np.zeros((d_a, d_a), dtype=complex)
    if route == "primal":
        return SdpResult(0.0, j, x, 0.0, 0.0, SOLVED, 0.0, 0.0, route, info={"zero_input": True})
    return SdpResult(0.0, x, j, 0.0, 0.0, SOLVED, 0.0, 0.0, route, info={"zero_input": True})


# -- barrier method --------------------------------------------------------

@lru_cache(maxsize=None)
def _hermitian_basis(d: int) -> np.ndarray:
    """Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = -1j / np.sqrt(2)
            e[j, i] = 1j / np.sqrt(2)
            basis.append(e)
    return np.array(basis)


def _barrier_dual(w: np.ndarray, d_a: int, d_b: int, rel_gap: float, max_newton: int):
    """Minimize Tr X - (1/t) log det(X (x) 1 - W) along t -> infinity.

    ``w`` is normalized to unit largest eigenvalue by the caller.  After each
    centering the certified bracket is evaluated and the tightest one is kept:
    past t ~ 1e9 round-off in the gradient degrades centrality faster than
    the barrier gap shrinks.
    """
    n = d_a * d_b
    basis = _hermitian_basis(d_a)
    big = np.array([np.kron(b, np.eye(d_b)) for b in basis])
    c = np.array([np.trace(b).real for b in basis])
    eye_b = np.eye(d_b)

    def to_x(vec):
        return np.tensordot(vec, basis, axes=1)

    def slack(vec):
        return np.kron(to_x(vec), eye_b) - w

    x = 2.0 * c.copy()  # X = 2 * 1_A, slack >= 1 since lambda_max(W) = 1
    lower0 = np.trace(w).real / d_b
    t = n / max(float(c @ x) - lower0, 1e-12)
    mu = 10.0
    iters = 0
    best = None
    while True:
        # damped Newton step 1/(1 + lambda) stays inside the domain for
        # self-concordant barriers
        centered = False
        for _ in range(60):
            iters += 1
            if iters > max_newton:
                raise SolverError("barrier method exceeded its Newton budget")
            wv, vv = np.linalg.eigh(slack(x))
            if wv[0] <= 0:
                raise SolverError("barrier iterate left the feasible region")
            sinv = (vv / wv) @ dag(vv)
            m = sinv @ big
            grad = t * c - np.einsum("kii->k", m).real
            flat = m.reshape(len(c), -1)
            hess = (flat @ m.transpose(0, 2, 1).reshape(len(c), -1).T).real
            step = -np.linalg.solve(hess, grad)
            dec2 = float(-grad @ step)
            if dec2 <= 1e-12:
                centered = True
                break
            x = x + step / (1 + math.sqrt(dec2)) if dec2 > 0.1 else x + step
        wv, vv = np.linalg.eigh(slack(x))
        j = project_cptp((vv / wv) @ dag(vv) / t, d_a, d_b)
        xf, _ = lift_dual(to_x(x), w, d_b)
        gap = float(np.trace(xf).real - np.sum(w * j.T).real)
        if best is None or gap < best[0]:
            best = (gap, to_x(x), j, t)
        if n / t <= rel_gap or not centered:
            break
        t *= mu
    _, xb, jb, tb = best
    return xb, jb, iters, tb


def hmin_exp_dual(w, shape, rel_gap: float = 1e-10, max_newton: int = 2000) -> SdpResult:
    """Certified ``min Tr X s.t. X (x) 1_B >= W`` (value ``2^{-H_min(B|A)_W}``).

    ``shape`` is ``(d_A, d_B)``.  Slightly negative eigenvalues of W above
    -1e-9 are clipped; ``W = 0`` returns value 0 (``H_min = +inf``).
    """
    w, d_a, d_b = _clean_w(w, shape)
    scale = float(np.linalg.eigvalsh(w)[-1])
    if scale <= 1e-300:
        return _zero_result(d_a, d_b, "dual")
    try:
        x, j, iters, t = _barrier_dual(w / scale, d_a, d_b, rel_gap, max_newton)
    except (SolverError, np.linalg.LinAlgError) as exc:
        x = scale * 2 * identity(d_a)
        return SdpResult(math.nan, x, np.eye(d_a * d_b) / d_b, math.inf, 0.0, NUMERICAL_FAILURE,
                         math.nan, math.nan, "dual", info={"error": str(exc)})
    x, resid = lift_dual(scale * x, w, d_b)
    upper = float(np.trace(x).real)
    lower = float(np.sum(w * j.T).real)
    gap = upper - lower
    return SdpResult(upper, x, j, gap, resid, _status(gap, resid), upper, lower, "dual", iters,
                     {"barrier_t": t / scale})


PRIMAL_SOLVER_OPTS = {"SCS": {"eps_abs": 1e-10, "eps_rel": 1e-10, "max_iters": 200000}}


def hmin_exp_primal(w, shape, solver: str = "SCS", **solver_opts) -> SdpResult:
    """``max Tr[W J]`` over Choi matrices of channels, via cvxpy.

    SCS at tight tolerances is the default; at these sizes it reaches about
    1e-10, where interior-point backends stall near 1e-7.

    The returned optimizer J is projected to an exactly CPTP matrix, so
    ``value = Tr[W J]`` is always attained by a genuine channel.
    """
    import cvxpy as cp

    w, d_a, d_b = _clean_w(w, shape)
    scale = float(np.linalg.eigvalsh(w)[-1])
    if scale <= 1e-300:
        return _zero_result(d_a, d_b, "primal")
    wn = w / scale
    n = d_a * d_b
    jv = cp.Variable((n, n), hermitian=True)
    cons = [jv >> 0, cp.partial_trace(jv, [d_a, d_b], axis=1) == np.eye(d_a)]
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(wn @ jv))), cons)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob.solve(solver=solver, **{**PRIMAL_SOLVER_OPTS.get(solver, {}), **solver_opts})
    except cp.error.SolverError as exc:
        return SdpResult(math.nan, np.eye(n) / d_b, np.zeros((d_a, d_a)), math.inf, 0.0,
                         NUMERICAL_FAILURE, math.nan, math.nan, "primal", info={"error": str(exc)})
    if jv.value is None or cons[1].dual_value is None:
        return SdpResult(math.nan, np.eye(n) / d_b, np.zeros((d_a, d_a)), math.inf, 0.0,
                         NUMERICAL_FAILURE, math.nan, math.nan, "primal", info={"status": prob.status})
    j = project_cptp(np.asarray(jv.value), d_a, d_b)
    x, resid = lift_dual(scale * np.asarray(cons[1].dual_value), w, d_b)
    lower = float(np.sum(w * j.T).real)
    upper = float(np.trace(x).real)
    gap = upper - lower
    return SdpResult(lower, j, x, gap, resid, _status(gap, resid), upper, lower, "primal",
                     info={"solver": solver, "solver_status": prob.status})


def hmin_exp_primal_barrier(w, shape) -> SdpResult:
    """Primal optimizer taken from the barrier central path (no cvxpy)."""
    r = hmin_exp_dual(w, shape)
    return SdpResult(r.lower, r.certificate, r.optimizer, r.duality_gap, r.feasibility_residual,
                     r.status, r.upper, r.lower, "primal-barrier", r.iterations, r.info)


def hmin_exp(w, shape) -> float:
    r = hmin_exp_dual(w, shape)
    if not r.solved:
        raise SolverError(f"min-entropy SDP failed: {r.status}")
    return r.value


@dataclass
class ScalingReport:
    ok: bool
    value: float
    trace: float
    normalized_value: float
    residual: float
    degenerate: bool = False


def hmin_normalized_identity_check(g, shape, tol: float = 1e-6) -> ScalingReport:
    """Check 2^{-H_min(G)} = Tr G * 2^{-H_min(G / Tr G)}."""
    g = as_matrix(g)
    tr = float(np.trace(g).real)
    if tr <= 1e-12:
        return ScalingReport(False, math.nan, tr, math.nan, math.nan, degenerate=True)
    v = hmin_exp(g, shape)
    vn = hmin_exp(g / tr, shape)
    resid = abs(v - tr * vn)
    return ScalingReport(resid <= tol * max(1.0, abs(v)), v, tr, vn, resid)
