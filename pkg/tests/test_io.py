import json
import math

import numpy as np
from hypothesis import given, strategies as st

from livsiclab.io import fmt, write_csv, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(x):
    assert float(fmt(x)) == x


def test_fmt_types():
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(3)) == "3" and fmt(np.float64(0.1)) == "0.10000000000000001"
    assert fmt("x") == "x"


def test_writers_are_atomic_and_clean(tmp_path):
    p = write_csv(tmp_path / "sub" / "t.csv", ["a", "b"], [(1, 0.5), (2, math.inf)])
    assert p.read_text() == "a,b\n1,0.5\n2,inf\n"
    assert not [f for f in p.parent.iterdir() if f.name.endswith(".tmp")]
    j = write_json(tmp_path / "s.json", {"b": np.float64(1.5), "a": np.arange(2)})
    assert json.loads(j.read_text()) == {"a": [0, 1], "b": 1.5}
    assert j.read_text().index('"a"') < j.read_text().index('"b"')
