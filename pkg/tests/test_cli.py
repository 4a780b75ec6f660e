import csv
import io
import json

import pytest

from alpert.cli import main
from alpert.twoweight import EXAMPLE_COLUMNS

LEBESGUE = {"pieces": [{"a": 0, "b": 1, "coeffs": [1]}]}
MIXED = {"atoms": [{"x": "1/3", "mass": 1}], "pieces": [{"a": 0, "b": 1, "coeffs": [1, "1/2"]}]}


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        p = tmp_path / name
        p.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(p)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_lebesgue(files, capsys):
    code, out, err = run(capsys, "verify", "--measure", files("m.json", LEBESGUE), "--k", "2",
                         "--depth", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows


def test_verify_mixed_measure(files, capsys):
    code, _, _ = run(capsys, "verify", "--measure", files("m.json", MIXED), "--k", "3", "--depth", "4")
    assert code == 0


def test_basis_json(files, capsys):
    code, out, _ = run(capsys, "basis", "--measure", files("m.json", LEBESGUE), "--k", "2",
                       "--interval", "1:1")
    assert code == 0
    data = json.loads(out)
    assert len(data["functions"]) == 2 and data["report"]["expected_count"] == 2 and data["pass"]


def test_transform_round_trip(files, capsys):
    f = files("f.json", {"root": ["0", "1"], "depth": 2, "poly": [0, 1, -2]})
    code, out, _ = run(capsys, "transform", "--measure", files("m.json", MIXED), "--func", f,
                       "--depth", "3")
    assert code == 0
    assert out.splitlines()[0].split(",") == ["m", "j", "l", "value"]


def test_moments_table(files, capsys):
    code, out, _ = run(capsys, "moments", "--measure", files("m.json", LEBESGUE), "--depth", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3
    assert all(r["pd"] == "true" and r["rank"] == "2" for r in rows)


def test_example_table(capsys):
    code, out, _ = run(capsys, "example", "--eps", "0.1", "--jmax", "40", "--k", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == EXAMPLE_COLUMNS
    assert [int(r["j"]) for r in rows] == list(range(2, 41))
    # every float printed with 17 significant digits round-trips
    for r in rows:
        assert float(r["a2_ratio"]) == pytest.approx(int(r["j"]) ** -0.1, rel=1e-12)


def test_output_is_deterministic(files, tmp_path, capsys):
    m = files("m.json", MIXED)
    outs = []
    for n in range(2):
        p = tmp_path / f"o{n}.csv"
        assert main(["verify", "--measure", m, "--depth", "3", "--seed", "5", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_energy(files, capsys):
    code, out, _ = run(capsys, "energy", "--measure", files("m.json", LEBESGUE), "--k", "1",
                       "--depth", "2")
    assert code == 0 and out.startswith("a,b,")


def test_malformed_json_exit_2(files, capsys):
    code, _, err = run(capsys, "verify", "--measure", files("bad.json", "{oops"))
    assert code == 2 and "invalid JSON" in err


def test_missing_file_exit_2(capsys):
    assert run(capsys, "verify", "--measure", "/nonexistent.json")[0] == 2


def test_invalid_measure_exit_2(files, capsys):
    bad = {"atoms": [{"x": "1/2", "mass": -1}]}
    code, _, err = run(capsys, "verify", "--measure", files("m.json", bad))
    assert code == 2 and "nonpositive mass" in err


def test_bad_arguments_exit_2(files, capsys):
    m = files("m.json", LEBESGUE)
    assert run(capsys, "verify", "--measure", m, "--k", "9")[0] == 2
    assert run(capsys, "verify", "--measure", m, "--tol-rank", "0")[0] == 2
    assert run(capsys, "verify", "--measure", m, "--root", "1,0")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
