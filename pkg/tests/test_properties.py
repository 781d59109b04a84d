"""Property suites; run on their own with ``pytest tests/test_properties.py``."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from procunc import entropy as ent
from procunc import majorization as mj
from procunc import sdp
from procunc.opalg import partial_transpose

SETTINGS = settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])

unit = st.floats(0.0, 1.0, allow_nan=False, allow_subnormal=False)


@st.composite
def nonneg_vectors(draw, min_size=1, max_size=8):
    n = draw(st.integers(min_size, max_size))
    return draw(arrays(np.float64, n, elements=unit))


@st.composite
def distributions(draw, n=None, min_size=1, max_size=7):
    n = draw(st.integers(min_size, max_size)) if n is None else n
    w = draw(arrays(np.float64, n, elements=st.floats(0.0, 1.0, allow_subnormal=False)))
    if w.sum() == 0:
        w[0] = 1.0
    return w / w.sum()


def sorted_desc(p):
    return np.sort(p)[::-1]


# -- flatness --------------------------------------------------------------

@SETTINGS
@given(nonneg_vectors())
def test_flatness_idempotent(x):
    f = mj.flatness(x)
    np.testing.assert_allclose(mj.flatness(f), f, atol=1e-12)


@SETTINGS
@given(nonneg_vectors())
def test_flatness_dominates_prefixes_and_keeps_total(x):
    f = mj.flatness(x)
    assert np.all(np.cumsum(f) >= np.cumsum(x) - 1e-12)
    assert abs(f.sum() - x.sum()) <= 1e-12
    assert np.all(np.diff(f) <= 1e-12)


# -- majorization ----------------------------------------------------------

@SETTINGS
@given(distributions())
def test_majorization_reflexive(p):
    assert mj.majorizes(p, p)


@SETTINGS
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(distributions(n), distributions(n))))
def test_majorization_antisymmetric_on_sorted(pair):
    x, y = (sorted_desc(v) for v in pair)
    if mj.majorizes(x, y) and mj.majorizes(y, x):
        np.testing.assert_allclose(x, y, atol=1e-8)


@SETTINGS
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(distributions(n), distributions(n), distributions(n))))
def test_majorization_transitive(triple):
    x, y, z = triple
    if mj.majorizes(x, y) and mj.majorizes(y, z):
        assert mj.majorizes(x, z)


@SETTINGS
@given(distributions(), st.data())
def test_majorization_transitive_on_constructed_chains(p, data):
    # averaging with the uniform vector moves strictly down the order
    u = np.full(len(p), 1 / len(p))
    a, b = sorted(data.draw(st.tuples(unit, unit)))
    y, z = (1 - a) * p + a * u, (1 - b) * p + b * u
    assert mj.majorizes(p, y) and mj.majorizes(y, z) and mj.majorizes(p, z)


# -- Renyi entropy ---------------------------------------------------------

orders = st.one_of(st.floats(0.0, 50.0, allow_nan=False), st.just(math.inf))


@SETTINGS
@given(distributions(min_size=2), orders, orders)
def test_renyi_nonincreasing_in_alpha(p, a, b):
    lo, hi = min(a, b), max(a, b)
    assert ent.renyi_entropy(p, lo) >= ent.renyi_entropy(p, hi) - 1e-9


# -- partial transpose -----------------------------------------------------

@st.composite
def bipartite(draw):
    dims = draw(st.tuples(st.integers(1, 3), st.integers(1, 3)))
    n = dims[0] * dims[1]
    re = draw(arrays(np.float64, (n, n), elements=st.floats(-1, 1)))
    im = draw(arrays(np.float64, (n, n), elements=st.floats(-1, 1)))
    return re + 1j * im, dims


@SETTINGS
@given(bipartite(), st.sampled_from([0, 1]))
def test_partial_transpose_involution(op_dims, target):
    op, dims = op_dims
    once = partial_transpose(op, dims, target)
    assert np.array_equal(partial_transpose(once, dims, target), op)
    # transposing both factors is the full transpose
    both = partial_transpose(once, dims, 1 - target)
    assert np.array_equal(both, op.T)


# -- H_min scaling ---------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.floats(0.01, 100.0))
def test_hmin_scaling_linear(seed, dims, c):
    rng = np.random.default_rng(seed)
    n = dims[0] * dims[1]
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    w = g @ g.conj().T
    base = sdp.hmin_exp_dual(w, dims).value
    scaled = sdp.hmin_exp_dual(c * w, dims).value
    assert abs(scaled - c * base) <= 1e-6 * max(1.0, c * base)
