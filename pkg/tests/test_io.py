from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corner_lab.driver import generate_instance
from corner_lab.errors import ParseError
from corner_lab.gf2 import make_subspace
from corner_lab.io import (
    config_from_json,
    config_to_json,
    dumps,
    set_from_text,
    set_to_text,
    subspace_from_dict,
    subspace_to_dict,
)


def test_set_text_format():
    text = set_to_text([5, 1, 10], 5)
    assert text == "n=5\n01\n05\n0a\n"
    n, elems = set_from_text(text)
    assert n == 5 and elems.tolist() == [1, 5, 10]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.integers(0, (1 << n) - 1)))))
def test_set_text_round_trip(data):
    n, elems = data
    m, back = set_from_text(set_to_text(elems, n))
    assert m == n and back.tolist() == sorted(elems)


@pytest.mark.parametrize("text, where", [
    ("", "line 1"),
    ("k=3\n1\n", "line 1"),
    ("n=x\n", "line 1"),
    ("n=3\n1\nzz\n", "line 3"),
    ("n=3\n1\n9\n", "line 3"),
])
def test_set_text_errors_name_the_line(text, where):
    with pytest.raises(ParseError, match=where):
        set_from_text(text)


def test_subspace_dict_round_trip():
    V = make_subspace([0b0110, 0b1001], 0b0001, 4)
    assert subspace_from_dict(subspace_to_dict(V), 4) == V


def test_configuration_round_trip():
    cfg = generate_instance("product-of-hyperplanes", 4, 3)
    back = config_from_json(config_to_json(cfg))
    assert back.same_as(cfg)


def test_configuration_parse_errors():
    with pytest.raises(ParseError, match="line 1"):
        config_from_json("{")
    with pytest.raises(ParseError, match="lacks"):
        config_from_json('{"n": 2}')


def test_dumps_handles_numpy_and_fractions():
    out = dumps({"a": np.int64(3), "b": np.arange(2), "c": Fraction(1, 3), "d": np.bool_(True)})
    assert '"c": "1/3"' in out and '"a": 3' in out
