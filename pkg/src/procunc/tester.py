"""Process POVMs (testers): effects on A (x) B induced by a probe state and a POVM.

A tester ``(rho^{RA}, M)`` feeds the A half of ``rho`` through a channel
``Psi: A -> B`` and measures ``M`` on R (x) B.  Outcome ``x`` occurs with
probability ``Tr[E_x J_Psi]`` where

    E_x = Tr_R[ ((rho^{RA})^{T_A} (x) 1_B) (M_x^{RB} (x) 1_A) ]

with every operator laid out in (R, A, B) order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import channels as ch
from .errors import DimensionError, InconsistencyError
from .opalg import (
    PSD_TOL,
    as_matrix,
    hermitian_part,
    identity,
    max_abs,
    min_eig,
    operator_norm,
    partial_trace,
    partial_transpose,
    permute_systems,
    psd_sqrt,
    tensor,
)

PROB_TOL = 1e-8


@dataclass
class Tester:
    d_R: int
    d_A: int
    d_B: int
    input_state: np.ndarray
    povm: ch.Povm
    effects: list
    reduced_input: np.ndarray  # (rho^A)^T
    name: str = field(default="", compare=False)

    @property
    def outcomes(self) -> int:
        return len(self.effects)

    @property
    def channel_dims(self) -> tuple[int, int]:
        return (self.d_A, self.d_B)


@dataclass
class ExtendedTester:
    base: Tester
    extended_effects: list

    @property
    def complement(self) -> np.ndarray:
        return self.extended_effects[-1]


@dataclass
class OverlapTable:
    entries: np.ndarray
    max_overlap: float
    exclude_complement: bool = False

    @property
    def argmax(self) -> tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.entries), self.entries.shape))


def tester_effect(rho_ra: np.ndarray, m_rb: np.ndarray, d_R: int, d_A: int, d_B: int) -> np.ndarray:
    dims = (d_R, d_A, d_B)
    rho_ta = tensor(partial_transpose(rho_ra, (d_R, d_A), 1), identity(d_B))
    # M on (R, B, A) moved to (R, A, B)
    m_full = permute_systems(tensor(m_rb, identity(d_A)), (d_R, d_B, d_A), (0, 2, 1))
    return hermitian_part(partial_trace(rho_ta @ m_full, dims, (1, 2)))


def build_tester(input_state, povm: ch.Povm, d_R: int, d_A: int, d_B: int, name: str = "") -> Tester:
    """Derive the process effects of ``(input_state, povm)``.

    ``input_state`` lives on R (x) A and ``povm`` on R (x) B.  Use ``d_R = 1``
    for a tester without a reference system and ``d_A = 1`` for the state
    case, where the channel is a state preparation.
    """
    rho = ch.check_density(input_state)
    if rho.shape[0] != d_R * d_A:
        raise DimensionError(f"input state of dim {rho.shape[0]} does not match d_R*d_A = {d_R * d_A}")
    if povm.dim != d_R * d_B:
        raise DimensionError(f"POVM of dim {povm.dim} does not match d_R*d_B = {d_R * d_B}")
    ch.validate_povm(povm)
    effects = [tester_effect(rho, m, d_R, d_A, d_B) for m in povm.effects]
    reduced = partial_trace(rho, (d_R, d_A), 1).T
    for e in effects:
        lam = min_eig(e)
        if lam < -PSD_TOL:
            raise InconsistencyError(f"tester effect has eigenvalue {lam:.3e}")
    resid = max_abs(sum(effects) - tensor(reduced, identity(d_B)))
    if resid > 1e-8:
        raise InconsistencyError(f"tester effects violate sum E_x = (rho^A)^T (x) 1 (residual {resid:.3e})")
    return Tester(d_R, d_A, d_B, rho, povm, effects, reduced, name=name)


def state_tester(povm: ch.Povm, name: str = "") -> Tester:
    """Tester for state-preparation channels: no reference, d_A = 1."""
    return build_tester(np.ones((1, 1)), povm, 1, 1, povm.dim, name=name)


def random_tester(d_R: int, d_A: int, d_B: int, outcomes: int, seed=None, pure: bool = False) -> Tester:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho = ch.random_density(d_R * d_A, rng, rank=1 if pure else None)
    povm = ch.random_povm(d_R * d_B, outcomes, rng, dims=(d_R, d_B))
    return build_tester(rho, povm, d_R, d_A, d_B)


def probabilities(tester: Tester, channel: ch.QuantumChannel, tol: float = PROB_TOL) -> np.ndarray:
    """Outcome distribution p_x = Tr[E_x J] of ``tester`` on ``channel``."""
    if (channel.d_in, channel.d_out) != tester.channel_dims:
        raise DimensionError(
            f"channel dims {(channel.d_in, channel.d_out)} do not match tester {tester.channel_dims}"
        )
    return probabilities_from_choi(tester, channel.choi, tol)


def probabilities_from_choi(tester: Tester, choi: np.ndarray, tol: float = PROB_TOL) -> np.ndarray:
    jt = np.asarray(choi).T
    p = np.array([np.sum(e * jt).real for e in tester.effects])
    if p.min() < -tol or p.max() > 1 + tol or abs(p.sum() - 1) > tol:
        raise InconsistencyError(f"tester produced an invalid distribution {p!r}")
    return np.clip(p, 0.0, 1.0)


def operational_probabilities(tester: Tester, channel: ch.QuantumChannel) -> np.ndarray:
    """Probabilities by simulating the experiment: Tr[M_x (1_R (x) Psi)(rho^{RA})]."""
    d_R, d_A, d_B = tester.d_R, tester.d_A, tester.d_B
    rho = tester.input_state.reshape(d_R, d_A, d_R, d_A)
    j = channel.choi.reshape(d_A, d_B, d_A, d_B)
    # (1 (x) Psi)(rho)_{rb, r'b'} = sum_{a,a'} rho_{ra, r'a'} J_{ab, a'b'}
    out = np.einsum("xayc,abcd->xbyd", rho, j).reshape(d_R * d_B, d_R * d_B)
    return np.array([np.sum(m * out.T).real for m in tester.povm.effects])


def extend(tester: Tester) -> ExtendedTester:
    n = tester.d_A * tester.d_B
    comp = hermitian_part(identity(n) - tensor(tester.reduced_input, identity(tester.d_B)))
    lam = min_eig(comp)
    if lam < -PSD_TOL:
        raise InconsistencyError(f"complement effect is not PSD (min eigenvalue {lam:.3e})")
    return ExtendedTester(tester, list(tester.effects) + [comp])


def _sqrt_effects(effects) -> list[np.ndarray]:
    return [psd_sqrt(e) for e in effects]


def overlap_table(t1, t2, exclude_complement: bool = False) -> OverlapTable:
    """c_xy = || E~_x^{1/2} F~_y^{1/2} || over the extended effect sets.

    Accepts plain testers (they are extended first).  With
    ``exclude_complement`` the completion effects are left out, which is an
    exploration mode rather than the defined overlap.
    """
    e1 = t1 if isinstance(t1, ExtendedTester) else extend(t1)
    e2 = t2 if isinstance(t2, ExtendedTester) else extend(t2)
    if e1.base.channel_dims != e2.base.channel_dims:
        raise DimensionError(f"testers act on different spaces {e1.base.channel_dims} vs {e2.base.channel_dims}")
    a = e1.extended_effects[:-1] if exclude_complement else e1.extended_effects
    b = e2.extended_effects[:-1] if exclude_complement else e2.extended_effects
    sa, sb = _sqrt_effects(a), _sqrt_effects(b)
    table = np.array([[operator_norm(x @ y) for y in sb] for x in sa])
    if table.max() > 1 + 1e-8:
        raise InconsistencyError(f"overlap exceeds 1: {table.max()!r}")
    return OverlapTable(table, float(table.max()), exclude_complement)


def state_overlap(povm1: ch.Povm, povm2: ch.Povm) -> float:
    """max_xy ||M_x^{1/2} N_y^{1/2}|| for POVMs on a common space."""
    s1 = _sqrt_effects(povm1.effects)
    s2 = _sqrt_effects(povm2.effects)
    return max(operator_norm(x @ y) for x in s1 for y in s2)


def effect_pool(t1: Tester, t2: Tester) -> list[np.ndarray]:
    """Concatenated effects G_z: the m effects of ``t1`` then the n of ``t2``."""
    if t1.channel_dims != t2.channel_dims:
        raise DimensionError("testers act on different spaces")
    return list(t1.effects) + list(t2.effects)
