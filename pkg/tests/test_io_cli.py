import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import point_sets
from hartigan_lab.cli import main
from hartigan_lab.io import ParseError, parse_csv_text, parse_json_text, parse_points, points_to_csv


def test_csv_gadget_points(tmp_path):
    f = tmp_path / "g.csv"
    f.write_text("0\n5\n6\n9\n13\n")
    pts = parse_points(f)
    assert sorted(p[0] for p in pts) == [0, 5, 6, 9, 13]
    assert pts.exact


def test_json_single_point(tmp_path):
    f = tmp_path / "p.json"
    f.write_text("[[0.5,0.5]]")
    pts = parse_points(f)
    assert (len(pts), pts.dim) == (1, 2)
    assert pts[0] == (Fraction(1, 2), Fraction(1, 2))


def test_decimals_parse_exactly():
    assert parse_csv_text("0.1,2/3\n")[0] == (Fraction(1, 10), Fraction(2, 3))


def test_header_skipped():
    assert len(parse_csv_text("x,y\n1,2\n3,4\n")) == 2


def test_ragged_row_names_line():
    with pytest.raises(ParseError) as err:
        parse_csv_text("1,2\n3\n")
    assert err.value.line == 2


def test_non_numeric_field():
    with pytest.raises(ParseError) as err:
        parse_csv_text("1,2\n3,oops\n")
    assert (err.value.line, err.value.column) == (2, 2)


def test_empty_file(tmp_path):
    f = tmp_path / "e.csv"
    f.write_text("")
    with pytest.raises(ParseError):
        parse_points(f)


def test_json_errors():
    with pytest.raises(ParseError):
        parse_json_text("[[1],[2,3]]")
    with pytest.raises(ParseError):
        parse_json_text("[[1],")


@settings(max_examples=100, deadline=None)
@given(point_sets(min_n=1, exact=True))
def test_csv_roundtrip_exact(pts):
    assert parse_csv_text(points_to_csv(pts), exact=True) == pts


@settings(max_examples=100, deadline=None)
@given(point_sets(min_n=1, exact=False))
def test_csv_roundtrip_float(pts):
    assert parse_csv_text(points_to_csv(pts), exact=False) == pts


def test_cli_verify_appendix(capsys):
    assert main(["verify-appendix"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 10


def test_cli_lowerbound(capsys):
    assert main(["lowerbound", "--m", "2", "--verify"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "moves=4 min_gain>0"


def test_cli_lowerbound_bad_m(capsys):
    assert main(["lowerbound", "--m", "1"]) == 65
    assert "m must be ≥ 2" in capsys.readouterr().err


def test_cli_unknown_flag(capsys):
    assert main(["run", "--bogus"]) == 64
    assert "usage" in capsys.readouterr().err


def test_cli_inconsistent_config(tmp_path):
    assert main(["smoothed", "--builtin", "gadget:3", "--sigma", "0.1", "--mode", "exact"]) == 65
    f = tmp_path / "p.csv"
    f.write_text("0\n1\n5\n")
    assert main(["run", "--input", str(f), "--k", "2", "--rule", "scripted"]) == 65
    assert main(["run", "--input", str(f)]) == 65


def test_cli_run_outputs(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("0\n1\n10\n11\n20\n")
    trace, summary = tmp_path / "t.jsonl", tmp_path / "s.json"
    rc = main(["run", "--input", str(f), "--k", "2", "--seed", "3", "--trace", str(trace), "--summary", str(summary)])
    assert rc == 0
    doc = json.loads(summary.read_text())
    assert doc["terminated"] == "LOCAL_OPT"
    assert doc["config"]["seed"] == 3
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(recs) == doc["iterations"]
    assert all(r["gain_num"] > 0 and r["gain_den"] > 0 for r in recs)


def test_cli_run_max_iters(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("0\n1\n10\n11\n")
    a = tmp_path / "a.json"
    f2 = tmp_path / "assign.json"
    f2.write_text("[0,1,0,1]")
    rc = main(["run", "--input", str(f), "--k", "2", "--init", "given", "--assignment", str(f2),
               "--max-iters", "1", "--summary", str(a)])
    assert rc == 2


def test_cli_run_lloyd(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("0\n1\n10\n11\n")
    s = tmp_path / "s.json"
    assert main(["run", "--input", str(f), "--k", "2", "--method", "lloyd", "--summary", str(s)]) == 0
    assert json.loads(s.read_text())["method"] == "lloyd"


def test_cli_config_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"trials": 2, "seed": 5}))
    out = tmp_path / "o.csv"
    rc = main(["--config", str(conf), "smoothed", "--builtin", "gadget:3", "--sigma", "0.1",
               "--seed", "6", "--out", str(out)])
    assert rc == 0
    meta = json.loads((tmp_path / "o.csv.meta.json").read_text())
    assert meta["config"]["trials"] == 2
    assert meta["config"]["seed"] == 6
    assert len(out.read_text().splitlines()) == 3


def test_cli_config_unknown_key(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"nonsense": 1}))
    assert main(["--config", str(conf), "verify-appendix"]) == 65


def test_cli_deterministic_outputs(tmp_path):
    outs = []
    for tag in "ab":
        t = tmp_path / f"{tag}.jsonl"
        c = tmp_path / f"{tag}.csv"
        assert main(["lowerbound", "--m", "5", "--trace", str(t)]) == 0
        assert main(["smoothed", "--builtin", "gadget:4", "--sigma", "0.1,0.3", "--trials", "3",
                     "--seed", "2", "--out", str(c)]) == 0
        outs.append((t.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]
