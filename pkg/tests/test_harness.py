import csv
import math

import numpy as np
import pytest

from procunc import channels as ch
from procunc import entropy as ent
from procunc import harness as hs
from procunc import jsonio
from procunc import majorization as mj
from procunc import tester as tst
from procunc.errors import DimensionError, ValidationError


@pytest.fixture(scope="module")
def pair():
    rng = np.random.default_rng(7)
    t1 = tst.random_tester(2, 2, 2, 2, seed=rng)
    t2 = tst.random_tester(2, 2, 2, 3, seed=rng)
    return t1, t2, mj.compute_bounds(t1, t2, retain_primal=True)


def test_config_validation():
    with pytest.raises(ValidationError):
        hs.CampaignConfig(samples=0)
    with pytest.raises(ValidationError):
        hs.CampaignConfig(alpha_beta_pairs=((2, 2),))
    with pytest.raises(ValidationError):
        hs.CampaignConfig(tolerances={"bogus": 1})
    cfg = hs.CampaignConfig.from_dict({"seed": 3, "alpha_beta": [[1, 1], ["inf", 0.5]], "unused": 1})
    assert cfg.alpha_beta_pairs == ((1.0, 1.0), (math.inf, 0.5))
    assert "threads" not in cfg.as_dict()


def test_sample_channel_reproducible():
    cfg = hs.CampaignConfig(seed=5, samples=10)
    a = hs.sample_channel(cfg, 3)
    b = hs.sample_channel(cfg, 3)
    assert np.array_equal(a.choi, b.choi)
    assert not np.array_equal(a.choi, hs.sample_channel(cfg, 4).choi)
    assert ch.validate_cptp(a).ok


def test_short_campaign_has_no_violations(pair):
    t1, t2, b = pair
    rep = hs.run_verification(hs.CampaignConfig(seed=1, samples=200), t1, t2, bounds=b)
    assert rep.ok, rep.violations[:2]
    assert set(rep.relations) == {"renyi_relation", "sum_majorization", "product_majorization"}
    assert rep.relations["renyi_relation"]["checked"] == 600
    assert abs(rep.bounds_links["s_total_minus_2"]) <= 1e-6
    assert rep.empirical_lub_gap["sum"]["max_prefix_gap"] >= -1e-8


def test_determinism_and_thread_independence(pair):
    t1, t2, b = pair
    one = hs.run_verification(hs.CampaignConfig(seed=9, samples=40), t1, t2, bounds=b)
    two = hs.run_verification(hs.CampaignConfig(seed=9, samples=40), t1, t2, bounds=b)
    threaded = hs.run_verification(hs.CampaignConfig(seed=9, samples=40, threads=4), t1, t2, bounds=b)
    text = jsonio.dumps(one.as_dict())
    assert text == jsonio.dumps(two.as_dict()) == jsonio.dumps(threaded.as_dict())
    other = hs.run_verification(hs.CampaignConfig(seed=10, samples=40), t1, t2, bounds=b)
    assert jsonio.dumps(other.as_dict()) != text


def test_timing_only_when_requested(pair):
    t1, t2, b = pair
    rep = hs.run_verification(hs.CampaignConfig(seed=1, samples=2, timing=True), t1, t2, bounds=b)
    assert "timing" in rep.as_dict()
    rep = hs.run_verification(hs.CampaignConfig(seed=1, samples=2), t1, t2, bounds=b)
    assert "timing" not in rep.as_dict()


def test_corrupted_bounds_are_reported(pair):
    t1, t2, b = pair
    bad = jsonio.bounds_from_json(b.as_dict())
    bad.s_cumulative = bad.s_cumulative * 0.5
    bad.s = np.diff(bad.s_cumulative, prepend=0.0)
    bad.s_flat = mj.flatness(bad.s)
    rep = hs.run_verification(hs.CampaignConfig(seed=2, samples=20), t1, t2, bounds=bad)
    assert not rep.ok
    checks = {v["check"] for v in rep.violations}
    assert "s_total_minus_2" in checks and "pq_sum_le_s" in checks
    v = next(v for v in rep.violations if v["check"] == "pq_sum_le_s")
    assert v["spawn_key"] == [v["sample"]] and v["seed"] == 2
    # the recorded Choi matrix is the sampled channel
    choi = jsonio.decode_matrix(v["choi"])
    assert np.array_equal(choi, hs.sample_channel(hs.CampaignConfig(seed=2, samples=20), v["sample"]).choi)


def test_bounds_shape_mismatch(pair):
    t1, t2, b = pair
    with pytest.raises(DimensionError):
        hs.run_verification(hs.CampaignConfig(samples=2), t2, t1, bounds=b)


def test_csv_output(pair, tmp_path):
    t1, t2, b = pair
    path = tmp_path / "slacks.csv"
    hs.run_verification(hs.CampaignConfig(seed=1, samples=5), t1, t2, bounds=b, csv_path=str(path))
    rows = list(csv.reader(path.open()))
    assert rows[0][0] == "sample" and "pq_sum_le_s" in rows[0]
    assert len(rows) == 6
    assert all(float(x) >= -1e-7 for r in rows[1:] for x in r[1:])


def test_single_sample_identity_matches_state_case(mub_povms):
    z, x = mub_povms
    t1, t2 = tst.state_tester(z, "Z"), tst.state_tester(x, "X")
    cfg = hs.CampaignConfig(seed=4, samples=1, dims=(1, 1, 2))
    rep = hs.run_verification(cfg, t1, t2)
    rho = hs.sample_channel(cfg, 0, 1, 2).choi
    p = [np.trace(m @ rho).real for m in z.effects]
    q = [np.trace(m @ rho).real for m in x.effects]
    assert rep.mu_rhs == pytest.approx(1.0, abs=1e-9)
    direct = ent.shannon_entropy(p) + ent.shannon_entropy(q) - 1.0
    assert rep.relations["renyi_relation"]["checks"]["renyi(1,1)"]["worst_slack"] == pytest.approx(direct, abs=1e-12)


def test_tightness_probe(pair):
    t1, t2, b = pair
    rep = hs.tightness_probe(t1, t2, b)
    assert rep.ok and rep.max_gap <= 1e-6
    assert max(abs(g) for g in rep.subset_gaps) <= 1e-6
    with pytest.raises(ValidationError):
        hs.tightness_probe(t1, t2, mj.compute_bounds(t1, t2))


def test_conjecture_rhs_flat_overlaps():
    s = [1.0, 1.5, 2.0, 2.0]
    r = hs.conjecture_rhs(np.full((2, 2), 0.5), s)
    # every ratio is 1, so only the leading term survives
    assert r["rhs"] == pytest.approx(2.0, abs=1e-15)
    assert all(t["term"] == 0 for t in r["terms"])


def test_conjecture_rhs_terms_and_clamping():
    s = [1.0, 1.5, 1.8, 2.0]
    c = [0.8, 0.4, 0.2, 0.1]
    r = hs.conjecture_rhs(c, s)
    expected = -2 * math.log2(0.8) + (2 - 1.5) * math.log2(2)  # k=1 uses s_2; k>=2 clamp to s_4 = 2
    assert r["rhs"] == pytest.approx(expected, abs=1e-12)
    assert [t["clamped"] for t in r["terms"]] == [False, False, True]
    assert r["terms"][1]["coefficient"] == 0.0
    assert len(r["partial_rhs"]) == 4 and r["partial_rhs"][-1] == r["rhs"]


def test_conjecture_rhs_skips_zero_overlap():
    r = hs.conjecture_rhs([0.9, 0.5, 1e-9], [1.0, 1.2, 1.4, 1.6, 2.0])
    assert r["skipped_zero_overlap"] == [2]
    assert math.isfinite(r["rhs"])


def test_conjecture_explore_state_case(mub_state_testers):
    t1, t2 = mub_state_testers
    b = mj.compute_bounds(t1, t2, retain_primal=True)
    out = hs.conjecture_explore(t1, t2, hs.CampaignConfig(seed=3, samples=50, dims=(1, 1, 2)), bounds=b)
    assert out["rhs"] == pytest.approx(1.0, abs=1e-9)
    for reading in ("plain", "padded"):
        r = out["readings"][reading]
        assert not r["counterexample_candidate"]
        assert r["argmin"].startswith(("sample:", "witness:"))


@pytest.mark.parametrize("which", ["mub", "same", "random"])
def test_state_case_regression(which, mub_povms, rng):
    z, x = mub_povms
    if which == "mub":
        m, n = z, x
    elif which == "same":
        m, n = z, z
    else:
        m, n = ch.random_povm(2, 2, rng), ch.random_povm(2, 3, rng)
    states = [ch.random_density(2, rng) for _ in range(20)]
    rep = hs.state_case_regression(m, n, states)
    assert rep["ok"], rep["discrepancies"]
    if which == "mub":
        assert -2 * math.log2(rep["overlap"]) == pytest.approx(1.0, abs=1e-9)
    if which == "same":
        assert rep["mu_bound"] == pytest.approx(0.0, abs=1e-12)
