import json

import numpy as np
import pytest

from utils.errors import ParseError, ValidityError
from utils.utils import (
    algebra_to_json,
    evaluate_params,
    format_structure_tuple,
    load_algebra_file,
    load_matrix,
    parse_algebra,
    parse_algebra_json,
    parse_params,
    parse_structure_tuple,
)


def test_abelian_tuple():
    L = parse_structure_tuple("(0,0,0,0)")
    assert L.dim == 4
    assert not L.constants.any()


def test_coefficients_and_parameters():
    L = parse_structure_tuple("(f^{23}+1/2 f^{16}, -1/2 f^{26}, f^{36}, a f^{56}, -a f^{46}, 0)", params={"a": "2"})
    assert L.constants[0, 5, 0] == pytest.approx(-0.5)
    assert L.constants[3, 5, 4] == pytest.approx(2.0)
    assert L.exact is not None


def test_format_structure_tuple():
    assert format_structure_tuple(parse_structure_tuple("(f^{23}, f^{36}, -f^{26}, 0, 0, 0)")) == (
        "(f^{23}, f^{36}, -f^{26}, 0, 0, 0)"
    )
    text = format_structure_tuple(parse_structure_tuple("(f^{23} + 1/2 f^{16}, -1/2 f^{26}, f^{36}, 0, 0, 0)"))
    assert text == "(1/2f^{16} + f^{23}, -1/2f^{26}, f^{36}, 0, 0, 0)"
    assert parse_structure_tuple(text).constants.tolist() == parse_structure_tuple(
        "(f^{23} + 1/2 f^{16}, -1/2 f^{26}, f^{36}, 0, 0, 0)"
    ).constants.tolist()


def test_reversed_indices_flip_sign():
    a = parse_structure_tuple("(f^{32}, 0, 0)")
    b = parse_structure_tuple("(-f^{23}, 0, 0)")
    assert np.array_equal(a.constants, b.constants)


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("(f^{23}, f^{77}, 0)", 1, 10),
        ("(f^{23},\n f^{77}, 0)", 2, 2),
        ("f^{23}, 0, 0", 1, 1),
    ],
)
def test_parse_error_location(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_structure_tuple(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_structure_tuple("(f^{23}, , 0)")
    with pytest.raises(ParseError):
        parse_structure_tuple("(f^{23}, 1, 0)")
    with pytest.raises(ParseError):
        parse_structure_tuple("(a f^{23}, 0, 0)")
    with pytest.raises(ValidityError):
        parse_structure_tuple("(f^{23}, f^{12}, 0)")


def test_algebra_json():
    L = parse_algebra_json('{"dim": 3, "brackets": [{"i": 2, "j": 3, "k": 1, "c": "-1"}]}')
    assert np.array_equal(L.constants, parse_structure_tuple("(f^{23}, 0, 0)").constants)
    assert parse_algebra(json.dumps(algebra_to_json(L))).constants.tolist() == L.constants.tolist()
    for bad in ('{"brackets": []}', '{"dim": 0}', '{"dim": 2, "brackets": [{"i": 1, "j": 3, "k": 1, "c": 1}]}', "{"):
        with pytest.raises(ParseError):
            parse_algebra_json(bad)


def test_parse_params():
    assert parse_params("a=1/2, b=2") == {"a": "1/2", "b": "2"}
    assert parse_params(None) == {}
    assert evaluate_params({"a": "1/2", "b": "sqrt(4)"}) == {"a": 0.5, "b": 2.0}
    for bad in ("a", "a=", "=1", "a=1/"):
        with pytest.raises(ParseError):
            parse_params(bad)


def test_load_matrix(tmp_path):
    text = tmp_path / "J.txt"
    text.write_text("0 -1\n1 0\n")
    assert load_matrix(str(text)).tolist() == [[0.0, -1.0], [1.0, 0.0]]
    js = tmp_path / "g.json"
    js.write_text('[["1/2", 0], [0, 1]]')
    assert load_matrix(str(js))[0, 0] == 0.5
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n4 5 6\n")
    with pytest.raises(ParseError):
        load_matrix(str(bad))
    with pytest.raises(ParseError):
        load_matrix(str(tmp_path / "missing.txt"))


def test_load_algebra_file(tmp_path):
    path = tmp_path / "alg.txt"
    path.write_text("(f^{23}, f^{36}, -f^{26}, 0, 0, 0)\n")
    assert load_algebra_file(str(path)).dim == 6
