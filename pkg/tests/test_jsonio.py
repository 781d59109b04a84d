import io
import json
import math

import numpy as np
import pytest

from procunc import channels as ch
from procunc import jsonio
from procunc import majorization as mj
from procunc import tester as tst
from procunc.errors import InputError


def roundtrip(obj):
    return json.loads(jsonio.dumps(obj))


def test_float_codec_is_bit_exact(rng):
    vals = list(rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, size=200))
    vals += [0.1, 1 / 3, 5e-324, 1.7976931348623157e308, -0.0]
    for x in vals:
        y = jsonio.decode_float(roundtrip(jsonio.encode_float(x)))
        assert y == x and math.copysign(1, y) == math.copysign(1, x)


def test_non_finite_as_strings():
    assert jsonio.encode_float(math.inf) == "inf"
    assert jsonio.encode_float(-math.inf) == "-inf"
    assert jsonio.encode_float(math.nan) == "nan"
    assert jsonio.decode_float("inf") == math.inf
    assert jsonio.decode_float("-Infinity") == -math.inf
    assert math.isnan(jsonio.decode_float("nan"))
    text = jsonio.dumps({"a": math.inf, "b": [np.float64("nan")]})
    assert "Infinity" not in text and "NaN" not in text
    with pytest.raises(InputError):
        jsonio.decode_float("seven")
    with pytest.raises(InputError):
        jsonio.decode_float(True)


def test_matrix_roundtrip(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    back = jsonio.decode_matrix(roundtrip(jsonio.encode_matrix(a)))
    assert np.array_equal(a, back)
    # real entries may be written without the imaginary part
    np.testing.assert_array_equal(jsonio.decode_matrix([[1, 0], [0, 2.5]]), np.diag([1, 2.5]))


def test_operator_dims_checked():
    with pytest.raises(InputError, match="dims"):
        jsonio.decode_operator({"dims": [2, 2], "matrix": [[1, 0], [0, 1]]})
    with pytest.raises(InputError):
        jsonio.decode_matrix([[1, 0], [0]])


def test_channel_roundtrip(rng):
    c = ch.random_cptp(2, 3, seed=rng)
    back = jsonio.channel_from_json(roundtrip(jsonio.channel_to_json(c)))
    assert np.array_equal(back.choi, c.choi)
    assert (back.d_in, back.d_out) == (2, 3)


def test_povm_and_tester_roundtrip(rng):
    t = tst.random_tester(2, 2, 2, 3, seed=rng)
    raw = {"version": jsonio.VERSION, "testers": {"T": roundtrip(jsonio.tester_to_json(t))}}
    doc = jsonio.load_document(raw)
    t2 = doc.tester("T")
    for a, b in zip(t.effects, t2.effects):
        assert np.array_equal(a, b)


def test_document_roundtrip_bundled():
    for name in jsonio.bundled_names():
        doc = jsonio.load_document(f"example:{name}")
        first = jsonio.dumps(doc.to_json())
        again = jsonio.dumps(jsonio.load_document(json.loads(first)).to_json())
        assert first == again


def test_bounds_roundtrip(mub_state_testers):
    b = mj.compute_bounds(*mub_state_testers)
    back = jsonio.bounds_from_json(roundtrip(jsonio.bounds_to_json(b)))
    assert np.array_equal(back.s_cumulative, b.s_cumulative)
    assert np.array_equal(back.t_cumulative, b.t_cumulative)
    assert back.argmax_subsets == b.argmax_subsets


def test_bounds_length_checked(mub_state_testers):
    raw = roundtrip(mj.compute_bounds(*mub_state_testers).as_dict())
    raw["s_cumulative"] = raw["s_cumulative"][:-1]
    with pytest.raises(InputError):
        jsonio.bounds_from_json(raw)
    with pytest.raises(InputError):
        jsonio.bounds_from_json({"m": 2})


def test_examples_path_falls_back_to_package_data(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    doc = jsonio.load_document("examples/identity_qubit.json")
    assert set(doc.testers) == {"T1", "T2"}
    with pytest.raises(InputError, match="no such file"):
        jsonio.load_document("examples/missing.json")


def test_stdin(monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"version": jsonio.VERSION})))
    assert jsonio.load_document("-").version == jsonio.VERSION
    monkeypatch.setattr("sys.stdin", io.StringIO("{not json"))
    with pytest.raises(InputError, match="malformed"):
        jsonio.load_document("-")


@pytest.mark.parametrize("raw,msg", [
    ({"version": "other/9"}, "version"),
    ([], "object"),
    ({"version": jsonio.VERSION, "testers": {"T": {"dims": [1, 2, 2], "state": "nope", "povm": "P"}},
      "povms": {"P": {"dims": [2], "effects": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}}}, "unknown state"),
    ({"version": jsonio.VERSION, "testers": {"T": {"dims": [1, 2], "state": "s", "povm": "P"}}}, "dims"),
    ({"version": jsonio.VERSION, "campaign": {"testers": ["ghost"]}}, "ghost"),
    ({"version": jsonio.VERSION, "channels": {"c": {"d_in": 2, "d_out": 2}}}, "kraus"),
    ({"version": jsonio.VERSION, "states": []}, "section"),
])
def test_document_errors(raw, msg):
    with pytest.raises(InputError, match=msg):
        jsonio.parse_document(raw)


def test_inline_state_and_povm():
    raw = {"version": jsonio.VERSION,
           "testers": {"T": {"dims": [1, 1, 2], "state": {"dims": [1], "matrix": [[1]]},
                             "povm": {"dims": [2], "effects": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}}}}
    doc = jsonio.parse_document(raw)
    t = doc.tester("T")
    np.testing.assert_allclose(tst.probabilities(t, ch.state_prep_channel(np.diag([0.3, 0.7]))), [0.3, 0.7])
    with pytest.raises(InputError, match="unknown tester"):
        doc.tester("U")


def test_channel_from_json_does_not_check_cp():
    raw = jsonio.channel_to_json(ch.identity_channel(2))
    raw.pop("kraus", None)
    raw["choi"]["matrix"][0][0] = [-1.0, 0.0]
    c = jsonio.channel_from_json(raw, "bad")
    assert not ch.validate_cptp(c).ok
