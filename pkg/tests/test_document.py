import pytest

from fptensor import BUNDLED, FPError, ParseError, load_bundled, load_frame_document, parse_frame_document
from fptensor.dsl import Var, to_string

GOOD = """
# a comment
name = "demo"
n = 2
frame = [
  ["exp(x1)", "0"],   # trailing comment
  ["0", "1"],
]
chart_map = ["x1 + x2^2", "x2"]
"""


def test_parse_good_document():
    doc = parse_frame_document(GOOD)
    assert doc.n == 2 and doc.name == "demo"
    assert doc.frame[1][1] is not None and doc.metric is None
    assert doc.chart_map[1] == Var("x", 2)
    assert not doc.natural_chart


def test_numbers_are_accepted_as_entries():
    doc = parse_frame_document('n = 2\nframe = [[1, 0], [0, 2.5]]\n')
    assert to_string(doc.frame[1][1]) == "2.5"


def test_toml_round_trip():
    doc = parse_frame_document(GOOD)
    assert parse_frame_document(doc.to_toml()) == doc


@pytest.mark.parametrize(
    "text,match",
    [
        ("n = 2\n", "exactly one"),
        ('n = 2\nframe = [["1","0"],["0","1"]]\nmetric = [["1","0"],["0","1"]]\n', "exactly one"),
        ('n = 1\nframe = [["1"]]\n', "'n'"),
        ('n = 2\nframe = [["1","0"]]\n', "2 rows"),
        ('n = 2\nframe = [["1","0"],["0"]]\n', "row 2"),
        ('n = 2\nframe = [["1","0"],["0","x3"]]\n', "out of range"),
        ('n = 2\nframe = [["1","0"],["0","1 +"]]\n', r"\[2\]\[2\]"),
        ('n = 2\nframe = [["1","0"],["0","1"]]\ncolour = "red"\n', "unknown key"),
        ('n = 2\nframe = [["1","0"],["0","1"]]\nchart_map = ["x1", "y2"]\n', "x1..xn"),
        ('n = 2\nframe = [["1","0"],["0","1"]]\nchart_map = ["x1"]\n', "chart_map"),
        ('n = 2\nframe = [["1","0"],["0","1"]]\nnatural_chart = "yes"\n', "boolean"),
        ("n = = 2", "invalid frame document"),
    ],
)
def test_bad_documents(text, match):
    with pytest.raises(ParseError, match=match):
        parse_frame_document(text)


def test_abs_warning():
    doc = parse_frame_document('n = 2\nframe = [["abs(y1) + 1","0"],["0","1"]]\n')
    assert doc.warnings


def test_missing_file(tmp_path):
    with pytest.raises(FPError):
        load_frame_document(tmp_path / "missing.toml")


def test_load_file(tmp_path):
    p = tmp_path / "f.toml"
    p.write_text(GOOD, encoding="utf-8")
    assert load_frame_document(p).name == "demo"


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_documents_load(name):
    doc = load_bundled(name)
    assert doc.name == name
    assert doc.chart_map is not None


def test_unknown_bundled_name():
    with pytest.raises(FPError):
        load_bundled("no-such-frame")
