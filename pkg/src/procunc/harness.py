"""Verification campaigns over sampled channels.

Every sample ``i`` draws its channel from ``SeedSequence(seed, spawn_key=(i,))``,
so a violation is reproduced by ``sample_channel(config, i)`` alone, and
serial and threaded runs give identical reports.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import channels as ch
from . import entropy as ent
from . import majorization as mj
from . import tester as tst
from .errors import DimensionError, ValidationError
from .jsonio import encode_matrix

DEFAULT_PAIRS = ((1.0, 1.0), (2.0, 2.0 / 3.0), (math.inf, 0.5))
DEFAULT_TOLERANCES = {
    "mu": 1e-7,
    "uur": 1e-8,
    "schur": 1e-8,
    "tightness": 1e-6,
    "conjecture": 1e-7,
    "regression": 1e-9,
}


@dataclass
class CampaignConfig:
    seed: int = 0
    samples: int = 1000
    dims: tuple = (2, 2, 2)
    env_dim: Optional[int] = None
    alpha_beta_pairs: tuple = DEFAULT_PAIRS
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    enumeration_cap: int = mj.DEFAULT_CAP
    threads: int = 1
    log_base: float = 2.0
    exclude_complement: bool = False
    record_choi: bool = True
    timing: bool = False

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.alpha_beta_pairs = tuple((ent.as_order(a), ent.as_order(b)) for a, b in self.alpha_beta_pairs)
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}
        self.validate()

    def validate(self):
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValidationError(f"dims must be three positive integers, got {self.dims}")
        if self.env_dim is not None and self.env_dim < 1:
            raise ValidationError("env_dim must be >= 1")
        for a, b in self.alpha_beta_pairs:
            try:
                ent.check_harmonic(a, b)
            except ValueError as exc:
                raise ValidationError(str(exc)) from exc
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValidationError(f"unknown tolerance keys {sorted(unknown)}")

    @property
    def workers(self) -> int:
        return (os.cpu_count() or 1) if self.threads == 0 else self.threads

    def as_dict(self) -> dict:
        d = asdict(self)
        # execution settings do not change results, so keep reports identical across them
        del d["threads"], d["timing"]
        d["alpha_beta_pairs"] = [list(p) for p in self.alpha_beta_pairs]
        d["dims"] = list(self.dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        keys = {f for f in cls.__dataclass_fields__}
        kw = {k: v for k, v in d.items() if k in keys}
        if "alpha_beta" in d:
            kw["alpha_beta_pairs"] = d["alpha_beta"]
        return cls(**kw)


def sample_channel(config: CampaignConfig, index: int, d_in: Optional[int] = None,
                   d_out: Optional[int] = None) -> ch.QuantumChannel:
    d_in = config.dims[1] if d_in is None else d_in
    d_out = config.dims[2] if d_out is None else d_out
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(index,)))
    return ch.random_cptp(d_in, d_out, config.env_dim, rng)


def _map(config: CampaignConfig, fn, items):
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


# -- verification campaign -------------------------------------------------

@dataclass
class CampaignReport:
    config: dict
    testers: dict
    overlap: float
    mu_rhs: float
    bounds: dict
    bounds_links: dict
    relations: dict
    empirical_lub_gap: dict
    violations: list
    timing: Optional[dict] = None

    @property
    def total_violations(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return self.total_violations == 0

    def as_dict(self) -> dict:
        d = {
            "ok": self.ok,
            "total_violations": self.total_violations,
            "config": self.config,
            "testers": self.testers,
            "overlap": self.overlap,
            "mu_rhs": self.mu_rhs,
            "bounds": self.bounds,
            "bounds_links": self.bounds_links,
            "relations": self.relations,
            "empirical_lub_gap": self.empirical_lub_gap,
            "violations": self.violations,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        return d


RELATION_CHECKS = {
    "renyi_relation": None,  # filled per (alpha, beta) pair
    "sum_majorization": ("pq_sum_le_s", "pq_sum_le_Fs", "shannon_ge_Fs"),
    "product_majorization": ("pq_prod_le_t", "pq_prod_le_Ft", "shannon_ge_Ft"),
}


def _pair_label(a: float, b: float) -> str:
    return f"renyi({a:g},{b:g})"


def _evaluate(config, t1, t2, overlap, bounds, index) -> dict:
    channel = sample_channel(config, index, t1.d_A, t1.d_B)
    p = tst.probabilities(t1, channel)
    q = tst.probabilities(t2, channel)
    slacks = {}
    for a, b in config.alpha_beta_pairs:
        r = ent.mu_relation_from_probs(p, q, t1.d_A, overlap, a, b, config.log_base)
        slacks[_pair_label(a, b)] = r.slack
    links = mj.uur_check(p, q, bounds, config.tolerances["uur"]).links
    for key in RELATION_CHECKS["sum_majorization"][:2] + RELATION_CHECKS["product_majorization"][:2]:
        slacks[key] = links[key]
    h = ent.shannon_entropy(p, config.log_base) + ent.shannon_entropy(q, config.log_base)
    slacks["shannon_ge_Fs"] = h - mj.schur_concave_eval("shannon", bounds.s_flat, base=config.log_base)
    slacks["shannon_ge_Ft"] = h - mj.schur_concave_eval("shannon", bounds.t_flat, base=config.log_base)
    return {"index": index, "p": p, "q": q, "slacks": slacks, "choi": channel.choi}


def _check_tol(config: CampaignConfig, check: str) -> float:
    if check.startswith("renyi"):
        return config.tolerances["mu"]
    if check.startswith("shannon"):
        return config.tolerances["schur"]
    return config.tolerances["uur"]


def run_verification(config: CampaignConfig, t1: tst.Tester, t2: tst.Tester,
                     bounds: Optional[mj.BoundVectors] = None, csv_path: Optional[str] = None) -> CampaignReport:
    """Sample channels and check the Rényi relation and both majorization chains on each.

    Violations are collected, never raised.  Pass ``bounds`` to check an
    externally supplied bound vector set instead of recomputing it.
    """
    if t1.channel_dims != t2.channel_dims:
        raise DimensionError(f"testers act on different spaces {t1.channel_dims} vs {t2.channel_dims}")
    clock = time.perf_counter()
    overlap = tst.overlap_table(t1, t2, config.exclude_complement).max_overlap
    if bounds is None:
        bounds = mj.compute_bounds(t1, t2, cap=config.enumeration_cap, threads=config.workers)
    if (bounds.m, bounds.n) != (t1.outcomes, t2.outcomes):
        raise DimensionError(f"bounds are for ({bounds.m}, {bounds.n}) outcomes, testers have "
                             f"({t1.outcomes}, {t2.outcomes})")
    if bounds.t is None:
        mj.t_vector(bounds)
    t_bounds = time.perf_counter() - clock

    rows = _map(config, lambda i: _evaluate(config, t1, t2, overlap, bounds, i), range(config.samples))

    checks = list(rows[0]["slacks"])
    groups = {"renyi_relation": [c for c in checks if c.startswith("renyi")],
              "sum_majorization": list(RELATION_CHECKS["sum_majorization"]),
              "product_majorization": list(RELATION_CHECKS["product_majorization"])}
    violations = []
    relations = {}
    for rel, names in groups.items():
        per = {}
        for name in names:
            vals = np.array([r["slacks"][name] for r in rows])
            tol = _check_tol(config, name)
            worst = int(np.argmin(vals))
            bad = np.nonzero(vals < -tol)[0]
            per[name] = {"worst_slack": float(vals[worst]), "worst_sample": worst,
                         "violations": int(bad.size), "tol": tol}
            for i in bad:
                violations.append(_violation(config, rows[i], rel, name, float(vals[i])))
        relations[rel] = {
            "checked": config.samples * len(names),
            "violations": sum(v["violations"] for v in per.values()),
            "worst_slack": min(v["worst_slack"] for v in per.values()),
            "checks": per,
        }

    # links that involve only the bound vectors
    internal = mj.uur_check(np.full(bounds.m, 1 / bounds.m), np.full(bounds.n, 1 / bounds.n), bounds).links
    bounds_links = {k: v for k, v in internal.items() if not k.startswith("pq_")}
    bounds_links["s_total_minus_2"] = float(bounds.s_cumulative[-1] - 2)
    for name, slack in bounds_links.items():
        bad = abs(slack) > 1e-6 if name == "s_total_minus_2" else slack < -config.tolerances["uur"]
        if bad:
            violations.append({"relation": "bounds", "check": name, "slack": slack})

    if csv_path:
        _write_csv(csv_path, rows, checks)

    report = CampaignReport(
        config=config.as_dict(),
        testers={"T1": {"name": t1.name, "dims": [t1.d_R, t1.d_A, t1.d_B], "outcomes": t1.outcomes},
                 "T2": {"name": t2.name, "dims": [t2.d_R, t2.d_A, t2.d_B], "outcomes": t2.outcomes}},
        overlap=overlap,
        mu_rhs=ent.mu_bound(overlap, config.log_base),
        bounds=bounds.as_dict(),
        bounds_links=bounds_links,
        relations=relations,
        empirical_lub_gap=_empirical_gap(rows, bounds),
        violations=violations,
    )
    if config.timing:
        report.timing = {"bounds_seconds": t_bounds, "total_seconds": time.perf_counter() - clock}
    return report


def _violation(config, row, rel, check, slack) -> dict:
    v = {"relation": rel, "check": check, "slack": slack, "sample": row["index"],
         "seed": config.seed, "spawn_key": [row["index"]],
         "p": row["p"].tolist(), "q": row["q"].tolist()}
    if config.record_choi:
        v["choi"] = encode_matrix(row["choi"])
    return v


def _empirical_gap(rows, bounds) -> dict:
    """Prefix gap between F(s), F(t) and the lattice LUB of the sampled joint vectors."""
    sums = [np.concatenate([r["p"], r["q"]]) for r in rows]
    prods = [np.outer(r["p"], r["q"]).ravel() for r in rows]
    out = {}
    for tag, vecs, flat in (("sum", sums, bounds.s_flat), ("product", prods, bounds.t_flat)):
        lub = mj.lattice_bounds(vecs, tol=1e-6, sort=True).lub
        gap = np.cumsum(flat) - np.cumsum(lub)
        out[tag] = {"max_prefix_gap": float(gap.max()), "prefix_gaps": gap.tolist()}
    return out


def _write_csv(path: str, rows, checks):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample"] + checks)
        for r in rows:
            w.writerow([r["index"]] + [repr(float(r["slacks"][c])) for c in checks])


# -- tightness -------------------------------------------------------------

@dataclass
class TightnessReport:
    gaps: list
    subset_gaps: list
    max_gap: float
    min_gap: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_gap <= self.tol and self.min_gap >= -self.tol

    def as_dict(self) -> dict:
        return {"ok": self.ok, "tol": self.tol, "max_gap": self.max_gap, "min_gap": self.min_gap,
                "gaps": self.gaps, "subset_gaps": self.subset_gaps}


def tightness_probe(t1: tst.Tester, t2: tst.Tester, bounds: mj.BoundVectors,
                    tol: float = DEFAULT_TOLERANCES["tightness"]) -> TightnessReport:
    """Run each retained primal optimizer channel through both testers.

    For every k the gap ``s_k - (sum of the k largest entries of p (+) q)``
    should vanish up to solver accuracy.
    """
    if bounds.primal_optimizers is None:
        raise ValidationError("bounds carry no primal optimizers; recompute with retain_primal=True")
    gaps, subset_gaps = [], []
    for k, (j, sub) in enumerate(zip(bounds.primal_optimizers, bounds.argmax_subsets), start=1):
        p = tst.probabilities_from_choi(t1, j)
        q = tst.probabilities_from_choi(t2, j)
        pq = np.concatenate([p, q])
        top = np.sort(pq)[::-1][:k].sum()
        gaps.append(float(bounds.s_cumulative[k - 1] - top))
        subset_gaps.append(float(bounds.s_cumulative[k - 1] - pq[list(sub)].sum()))
    return TightnessReport(gaps, subset_gaps, max(gaps), min(gaps), tol)


# -- conjecture explorer ---------------------------------------------------

def conjecture_rhs(overlaps, s_cumulative, k_max: Optional[int] = None, base: float = 2,
                   zero_tol: float = 1e-7) -> dict:
    """-2 log c_1 + sum_{k<=k_max} (2 - s_{2k}) log(c_k / c_{k+1}) with c sorted nonincreasingly.

    s_{2k} is read with its index clamped at m+n, where s is exactly 2.
    Terms whose c_{k+1} is zero (below ``zero_tol``, the size of square
    roots of roundoff eigenvalues) would be infinite; they are skipped and
    listed.
    """
    c = np.sort(np.asarray(overlaps, dtype=float).ravel())[::-1]
    size = len(s_cumulative)
    k_max = len(c) - 1 if k_max is None else min(k_max, len(c) - 1)
    log = lambda x: math.log(x) / math.log(base)
    value = -2 * log(c[0]) if c[0] > 0 else math.inf
    terms, skipped, partial = [], [], [value]
    for k in range(1, k_max + 1):
        idx = min(2 * k, size)
        coef = 0.0 if idx >= size else 2 - float(s_cumulative[idx - 1])
        if c[k] <= zero_tol:
            skipped.append(k)
            term = 0.0
        else:
            term = coef * log(c[k - 1] / c[k])
        value += term
        partial.append(value)
        terms.append({"k": k, "c_k": float(c[k - 1]), "c_k1": float(c[k]), "s_index": idx,
                      "clamped": 2 * k > size, "coefficient": coef, "term": term})
    return {"rhs": value, "partial_rhs": partial, "terms": terms, "skipped_zero_overlap": skipped,
            "sorted_overlaps": c.tolist()}


def conjecture_explore(t1: tst.Tester, t2: tst.Tester, config: CampaignConfig,
                       bounds: Optional[mj.BoundVectors] = None, k_max: Optional[int] = None) -> dict:
    """Search sampled channels for H(p) + H(q) below the conjectured Shannon bound.

    Two readings of the left side are reported: plain H(p) + H(q), and the
    padded vectors used by the Rényi relation.  A negative slack is only a
    counterexample candidate.
    """
    if bounds is None:
        bounds = mj.compute_bounds(t1, t2, cap=config.enumeration_cap, threads=config.workers)
    table = tst.overlap_table(t1, t2, config.exclude_complement).entries
    conj = conjecture_rhs(table, bounds.s_cumulative, k_max, config.log_base)
    d_a, base = t1.d_A, config.log_base

    def lhs(choi):
        p = tst.probabilities_from_choi(t1, choi)
        q = tst.probabilities_from_choi(t2, choi)
        plain = ent.shannon_entropy(p, base) + ent.shannon_entropy(q, base)
        padded = ent.shannon_entropy(ent.padded(p, d_a), base) + ent.shannon_entropy(ent.padded(q, d_a), base)
        return plain, padded

    vals = _map(config, lambda i: lhs(sample_channel(config, i, t1.d_A, t1.d_B).choi), range(config.samples))
    sources = [f"sample:{i}" for i in range(config.samples)]
    if bounds.primal_optimizers is not None:
        for k, j in enumerate(bounds.primal_optimizers, start=1):
            vals.append(lhs(j))
            sources.append(f"witness:{k}")
    vals = np.array(vals)
    tol = config.tolerances["conjecture"]
    out = {"rhs": conj["rhs"], "terms": conj["terms"], "skipped_zero_overlap": conj["skipped_zero_overlap"],
           "sorted_overlaps": conj["sorted_overlaps"], "k_max": len(conj["terms"]),
           "interpretation": "s index clamped at m+n; zero-overlap terms skipped", "readings": {}}
    for col, reading in enumerate(("plain", "padded")):
        i = int(np.argmin(vals[:, col]))
        slack = float(vals[i, col] - conj["rhs"])
        out["readings"][reading] = {
            "min_lhs": float(vals[i, col]),
            "argmin": sources[i],
            "slack": slack,
            "counterexample_candidate": slack < -tol,
            "sensitivity": [float(vals[i, col] - r) for r in conj["partial_rhs"]],
        }
    out["seed"] = config.seed
    return out


# -- state-case reduction --------------------------------------------------

def direct_state_s(povm1: ch.Povm, povm2: ch.Povm) -> np.ndarray:
    """s_k as the largest eigenvalue of the best k-subset sum of POVM effects."""
    import itertools

    effects = list(povm1.effects) + list(povm2.effects)
    out = []
    for k in range(1, len(effects) + 1):
        out.append(max(np.linalg.eigvalsh(sum(effects[i] for i in sub))[-1]
                       for sub in itertools.combinations(range(len(effects)), k)))
    return np.maximum.accumulate(np.array(out))


def state_case_regression(povm1: ch.Povm, povm2: ch.Povm, states: Sequence,
                          pairs=DEFAULT_PAIRS, tol: float = DEFAULT_TOLERANCES["regression"],
                          cap: int = mj.DEFAULT_CAP, base: float = 2) -> dict:
    """Compare the process pipeline on preparation channels with direct state-case formulas."""
    t1, t2 = tst.state_tester(povm1, "M"), tst.state_tester(povm2, "N")
    c_proc = tst.overlap_table(t1, t2).max_overlap
    c_state = tst.state_overlap(povm1, povm2)
    diffs = {"overlap": abs(c_proc - c_state),
             "mu_bound": abs(ent.mu_bound(c_proc, base) - ent.mu_bound(c_state, base))}
    prob, lhs = 0.0, 0.0
    for rho in states:
        channel = ch.state_prep_channel(rho)
        p = tst.probabilities(t1, channel)
        q = tst.probabilities(t2, channel)
        p_dir = np.array([np.trace(m @ rho).real for m in povm1.effects])
        q_dir = np.array([np.trace(n @ rho).real for n in povm2.effects])
        prob = max(prob, np.abs(p - p_dir).max(), np.abs(q - q_dir).max())
        for a, b in pairs:
            r = ent.mu_relation(t1, t2, channel, a, b, base, overlap=c_proc)
            direct = ent.renyi_entropy(p_dir, a, base) + ent.renyi_entropy(q_dir, b, base)
            lhs = max(lhs, abs(r.lhs - direct))
    diffs["probabilities"] = float(prob)
    diffs["mu_lhs"] = float(lhs)
    bounds = mj.compute_bounds(t1, t2, cap=cap)
    s_dir = direct_state_s(povm1, povm2)
    diffs["s_cumulative"] = float(np.abs(bounds.s_cumulative - s_dir).max())
    s_inc = np.diff(s_dir, prepend=0.0)
    bt = mj.BoundVectors(bounds.m, bounds.n, s_dir, s_inc, mj.flatness(s_inc), [], [])
    mj.t_vector(bt)
    diffs["t_cumulative"] = float(np.abs(bounds.t_cumulative - bt.t_cumulative).max())
    return {
        "ok": all(v <= tol for v in diffs.values()),
        "tol": tol,
        "discrepancies": diffs,
        "overlap": c_proc,
        "mu_bound": ent.mu_bound(c_proc, base),
        "s_cumulative": bounds.s_cumulative.tolist(),
        "t_cumulative": bounds.t_cumulative.tolist(),
        "states": len(states),
    }
