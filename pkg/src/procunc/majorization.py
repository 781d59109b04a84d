"""Majorization, the flatness process, and process-independent bound vectors.

Bound vectors ``s`` (for ``p (+) q``) and ``t`` (for ``p (x) q``) are stored
in construction order: their k-th prefix sums are exactly the targets
``s_k``/``t_k``.  They are never re-sorted before comparison.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import sdp
from .errors import DimensionError, EnumerationCapError, InconsistencyError, SolverError, ValidationError
from .opalg import PSD_TOL, min_eig

PREFIX_TOL = 1e-9
TIE_TOL = 1e-9
DEFAULT_CAP = 16


# -- vector predicates -----------------------------------------------------

def _pair(y, x) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    n = max(len(x), len(y))
    return np.pad(y, (0, n - len(y))), np.pad(x, (0, n - len(x)))


def sorted_prefix(x) -> np.ndarray:
    return np.cumsum(np.sort(np.asarray(x, dtype=float))[::-1])


def weak_majorizes(y, x, tol: float = PREFIX_TOL) -> bool:
    """True iff every sorted prefix sum of x is at most that of y."""
    y, x = _pair(y, x)
    return bool(np.all(sorted_prefix(x) <= sorted_prefix(y) + tol))


def majorizes(y, x, tol: float = PREFIX_TOL) -> bool:
    """True iff x is majorized by y (weak majorization plus equal totals)."""
    y, x = _pair(y, x)
    return weak_majorizes(y, x, tol) and abs(y.sum() - x.sum()) <= tol


def majorization_slack(y, x) -> float:
    """min_k (sorted prefix of y - sorted prefix of x); >= 0 iff y weakly majorizes x."""
    y, x = _pair(y, x)
    return float(np.min(sorted_prefix(y) - sorted_prefix(x)))


# -- flatness process ------------------------------------------------------

def flatness_step(x: np.ndarray) -> Optional[np.ndarray]:
    """One averaging step, or None if x is already nonincreasing."""
    ascents = np.nonzero(x[1:] > x[:-1])[0]
    if ascents.size == 0:
        return None
    j = int(ascents[0]) + 1
    # greatest i <= j-1 with x[i-1] >= mean(x[i..j]); x[-1] is +inf
    for i in range(j - 1, -1, -1):
        avg = x[i:j + 1].sum() / (j - i + 1)
        if i == 0 or x[i - 1] >= avg:
            break
    out = x.copy()
    out[i:j + 1] = avg
    return out


def flatness(x, trace: bool = False):
    """Iterate the averaging step until the vector is nonincreasing.

    With ``trace=True`` returns ``(result, steps)`` where ``steps`` lists the
    vector after each averaging step, starting with the input.
    """
    cur = np.clip(np.asarray(x, dtype=float).reshape(-1).copy(), 0.0, None)
    if np.any(np.asarray(x, dtype=float) < -1e-12):
        raise ValidationError("flatness needs a nonnegative vector")
    steps = [cur.copy()]
    while True:
        nxt = flatness_step(cur)
        if nxt is None:
            break
        cur = nxt
        steps.append(cur.copy())
    return (cur, steps) if trace else cur


def concave_majorant(x) -> np.ndarray:
    """F(x) through the least concave majorant of the prefix sums.

    Independent of the averaging loop; used as a cross-check.
    """
    x = np.asarray(x, dtype=float)
    pts = [(0, 0.0)] + [(i + 1, float(c)) for i, c in enumerate(np.cumsum(x))]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    out = np.empty(len(x))
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        out[x1:x2] = (y2 - y1) / (x2 - x1)
    return out


# -- lattice ---------------------------------------------------------------

@dataclass
class LatticeBounds:
    members: list
    a: np.ndarray
    b: np.ndarray
    glb: np.ndarray
    lub: np.ndarray
    trace: list
    members_sorted: bool = True

    def as_dict(self) -> dict:
        return {
            "a_S": self.a.tolist(),
            "b_S": self.b.tolist(),
            "glb": self.glb.tolist(),
            "lub": self.lub.tolist(),
            "members_sorted": self.members_sorted,
            "flatness_trace": [s.tolist() for s in self.trace],
        }


def lattice_bounds(vectors: Sequence, tol: float = PREFIX_TOL, sort: bool = False) -> LatticeBounds:
    """Greatest lower and least upper bound of a set of vectors.

    Members are zero-padded to a common length and read through their
    prefix sums in the given order (pass ``sort=True`` to sort them first).
    For sorted members ``a_S`` is itself sorted and is the GLB; ``F(b_S)``
    is the LUB in every case.
    """
    if len(vectors) == 0:
        raise ValidationError("lattice bounds of an empty set")
    vs = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if sort:
        vs = [np.sort(v)[::-1] for v in vs]
    n = max(len(v) for v in vs)
    vs = [np.pad(v, (0, n - len(v))) for v in vs]
    totals = [v.sum() for v in vs]
    if max(totals) - min(totals) > tol:
        raise ValidationError(f"vectors have different totals: {totals}")
    members_sorted = all(np.all(v[1:] <= v[:-1] + 1e-12) for v in vs)
    prefixes = np.array([np.cumsum(v) for v in vs])
    a = np.diff(prefixes.min(axis=0), prepend=0.0)
    b = np.diff(prefixes.max(axis=0), prepend=0.0)
    if members_sorted and np.any(a[1:] > a[:-1] + tol):
        raise InconsistencyError(f"prefix minima of sorted vectors are not nonincreasing: {a}")
    lub, trace = flatness(b, trace=True)
    return LatticeBounds(vs, a, b, a.copy(), lub, trace, members_sorted)


# -- bound vectors ---------------------------------------------------------

@dataclass
class EffectPool:
    """The m effects of the first tester followed by the n of the second."""

    effects: list
    m: int
    n: int
    shape: tuple

    def __post_init__(self):
        if len(self.effects) != self.m + self.n:
            raise DimensionError(f"pool has {len(self.effects)} effects, expected m+n = {self.m + self.n}")
        for e in self.effects:
            if min_eig(e) < -PSD_TOL:
                raise ValidationError("pool effect is not PSD")

    @property
    def size(self) -> int:
        return self.m + self.n

    def subset_operator(self, subset) -> np.ndarray:
        d = self.shape[0] * self.shape[1]
        out = np.zeros((d, d), dtype=complex)
        for i in subset:
            out = out + self.effects[i]
        return out

    @classmethod
    def from_testers(cls, t1, t2) -> "EffectPool":
        if t1.channel_dims != t2.channel_dims:
            raise DimensionError("testers act on different spaces")
        return cls(list(t1.effects) + list(t2.effects), t1.outcomes, t2.outcomes, t1.channel_dims)


@dataclass
class BoundVectors:
    m: int
    n: int
    s_cumulative: np.ndarray
    s: np.ndarray
    s_flat: np.ndarray
    argmax_subsets: list
    certificates: list = field(repr=False)
    t_cumulative: Optional[np.ndarray] = None
    t: Optional[np.ndarray] = None
    t_flat: Optional[np.ndarray] = None
    primal_optimizers: Optional[list] = field(default=None, repr=False)
    solves: int = 0
    pruned: int = 0

    @property
    def hmin_values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return -np.log2(self.s_cumulative)

    def as_dict(self) -> dict:
        d = {
            "m": self.m,
            "n": self.n,
            "s_cumulative": self.s_cumulative.tolist(),
            "s": self.s.tolist(),
            "s_flat": self.s_flat.tolist(),
            "hmin": self.hmin_values.tolist(),
            "argmax_subsets": [list(map(int, a)) for a in self.argmax_subsets],
            "solves": self.solves,
            "pruned": self.pruned,
        }
        if self.t is not None:
            d.update(t_cumulative=self.t_cumulative.tolist(), t=self.t.tolist(), t_flat=self.t_flat.tolist())
        return d


def _solve_subset(pool: EffectPool, subset, solver: Callable) -> sdp.SdpResult:
    r = solver(pool.subset_operator(subset), pool.shape)
    if not r.solved:
        raise SolverError(f"min-entropy SDP {r.status} on subset {list(subset)}", subset=tuple(subset))
    return r


def s_vector(pool: EffectPool, cap: int = DEFAULT_CAP, prune: bool = True, threads: int = 1,
             solver: Callable = sdp.hmin_exp_dual, retain_primal: bool = False,
             primal_solver: Callable = sdp.hmin_exp_primal) -> BoundVectors:
    """s_k = max over k-subsets I of 2^{-H_min(B|A)} of sum_{z in I} G_z.

    Subsets are scanned in lexicographic order.  A subset is skipped when the
    subadditivity bound value(I) <= value(I - z) + value({z}) already falls
    below the best value found at that level, with enough margin that the
    skipped subset could not have become the maximum or a tied argmax.  The
    result therefore does not depend on pruning or thread count.
    """
    size = pool.size
    if size > cap:
        raise EnumerationCapError(
            f"m+n = {size} exceeds the enumeration cap {cap}; 2^{size} subset SDPs would be needed. "
            f"Raise the cap explicitly (e.g. --enumeration-cap {size}) if that cost is acceptable."
        )
    margin = TIE_TOL + sdp.GAP_TOL
    prev_upper: dict = {(): 0.0}
    singles: list = []
    s_cum, argmax, certs = [], [], []
    solves = pruned = 0
    pool_exec = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for k in range(1, size + 1):
            upper: dict = {}
            results: dict = {}
            best = -math.inf
            subsets = list(itertools.combinations(range(size), k))
            chunk = max(1, 4 * threads)
            for start in range(0, len(subsets), chunk):
                todo = []
                for sub in subsets[start:start + chunk]:
                    if prune and k > 1:
                        ub = min(prev_upper[sub[:i] + sub[i + 1:]] + singles[z] for i, z in enumerate(sub))
                        if ub + margin < best:
                            upper[sub] = ub
                            pruned += 1
                            continue
                    todo.append(sub)
                if pool_exec is not None:
                    res = list(pool_exec.map(lambda s: _solve_subset(pool, s, solver), todo))
                else:
                    res = [_solve_subset(pool, s, solver) for s in todo]
                solves += len(todo)
                for sub, r in zip(todo, res):
                    results[sub] = r
                    upper[sub] = r.upper
                    best = max(best, r.value)
            if k == 1:
                singles = [upper[(z,)] for z in range(size)]
            top = max(r.value for r in results.values())
            win = next(sub for sub in subsets if sub in results and results[sub].value >= top - TIE_TOL)
            s_cum.append(top)
            argmax.append(win)
            certs.append(results[win])
            prev_upper = upper
    finally:
        if pool_exec is not None:
            pool_exec.shutdown()
    s_cum = np.maximum.accumulate(np.array(s_cum))
    s = np.diff(s_cum, prepend=0.0)
    bounds = BoundVectors(pool.m, pool.n, s_cum, s, flatness(s), argmax, certs, solves=solves, pruned=pruned)
    if retain_primal:
        bounds.primal_optimizers = [
            _primal_witness(pool, sub, primal_solver) for sub in argmax
        ]
    return bounds


def _primal_witness(pool: EffectPool, subset, primal_solver: Callable) -> np.ndarray:
    r = primal_solver(pool.subset_operator(subset), pool.shape)
    if not r.solved:
        raise SolverError(f"primal SDP {r.status} on subset {list(subset)}", subset=tuple(subset))
    return r.optimizer


def t_vector(bounds: BoundVectors) -> BoundVectors:
    """Fill the direct-product part: t_k = min((s_{k+1}/2)^2, 1), and 1 once k+1 > m+n."""
    size, length = bounds.m + bounds.n, bounds.m * bounds.n
    tc = np.ones(length)
    for k in range(1, length + 1):
        if k + 1 <= size:
            tc[k - 1] = min((bounds.s_cumulative[k] / 2) ** 2, 1.0)
    tc = np.maximum.accumulate(tc)
    bounds.t_cumulative = tc
    bounds.t = np.diff(tc, prepend=0.0)
    bounds.t_flat = flatness(bounds.t)
    return bounds


def compute_bounds(t1, t2, cap: int = DEFAULT_CAP, prune: bool = True, threads: int = 1,
                   retain_primal: bool = False, **kw) -> BoundVectors:
    pool = EffectPool.from_testers(t1, t2)
    return t_vector(s_vector(pool, cap=cap, prune=prune, threads=threads, retain_primal=retain_primal, **kw))


# -- checks ----------------------------------------------------------------

@dataclass
class UurReport:
    links: dict
    tol: float

    @property
    def ok(self) -> bool:
        return all(v >= -self.tol for v in self.links.values())

    @property
    def violations(self) -> list:
        return [k for k, v in self.links.items() if v < -self.tol]

    def as_dict(self) -> dict:
        return {"ok": self.ok, "tol": self.tol, "links": dict(self.links)}


def _chain(joint: np.ndarray, cum: np.ndarray, flat: np.ndarray, vec: np.ndarray, tag: str, bound: str) -> dict:
    pref = np.cumsum(np.sort(joint)[::-1])
    fcum = np.cumsum(flat)
    return {
        f"{tag}_le_{bound}": float(np.min(cum - pref)),
        f"{tag}_le_F{bound}": float(np.min(fcum - pref)),
        f"{bound}_le_F{bound}": float(np.min(fcum - cum)),
        f"F{bound}_le_sorted_{bound}": majorization_slack(vec, flat),
    }


def uur_check(p, q, bounds: BoundVectors, tol: float = 1e-8) -> UurReport:
    """Worst prefix slack of every link in the direct-sum and direct-product chains.

    ``p(+)q <= s`` compares sorted prefixes of the joint vector with the
    construction-order targets s_k; likewise for ``p(x)q`` and t_k.
    """
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if len(p) != bounds.m or len(q) != bounds.n:
        raise DimensionError(f"distributions of length {(len(p), len(q))} vs bounds for {(bounds.m, bounds.n)}")
    links = _chain(np.concatenate([p, q]), bounds.s_cumulative, bounds.s_flat, bounds.s, "pq_sum", "s")
    if bounds.t is not None:
        links.update(_chain(np.outer(p, q).ravel(), bounds.t_cumulative, bounds.t_flat, bounds.t, "pq_prod", "t"))
    return UurReport(links, tol)


SCHUR_FUNCTIONALS = ("shannon", "renyi", "min-entropy")


def schur_concave_eval(name: str, x, alpha=None, base: float = 2) -> float:
    """Evaluate a Schur-concave functional on a nonnegative (not necessarily normalized) vector."""
    from .entropy import renyi_entropy

    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12):
        raise ValidationError("Schur-concave evaluation needs a nonnegative vector")
    key = name.lower().replace("_", "-")
    if key == "shannon":
        return renyi_entropy(x, 1, base)
    if key == "renyi":
        if alpha is None:
            raise ValueError("renyi needs an order alpha")
        return renyi_entropy(x, alpha, base)
    if key in ("min-entropy", "min", "hmin"):
        return renyi_entropy(x, math.inf, base)
    raise ValueError(f"unknown functional {name!r}; expected one of {SCHUR_FUNCTIONALS}")
