import csv
import json
import math

import numpy as np
import pytest

from jumpfeedback import cli
from jumpfeedback.config import ConfigError, Range, parse_config, parse_value


def test_minimal_document_defaults():
    spec = parse_config('command = "dark-basis"\nN = 4\n')
    assert spec.command == "dark-basis" and spec.N == 4
    assert spec.Omega == 1 and spec.Gamma == 1
    assert spec.gamma == (1e-3,) * 4
    assert spec.tolerance == 1e-8 and spec.seed == 42


def test_scan_grid_size():
    spec = parse_config("command = scan-A\nN = 4\nA_grid = 0:0.1:6.4\ngamma = 1e-3\n")
    grid = spec.grid("A_grid")
    assert len(grid) == 65
    assert grid[-1] == pytest.approx(6.4)


def test_default_grids():
    spec = parse_config("command = scan-A-eps")
    assert len(spec.grid("A_grid")) == 63  # 0 .. 6.2 inside [0, 2 pi]
    assert len(spec.grid("eps_grid")) == 11


def test_pair_feedback_needs_four_atoms():
    with pytest.raises(ConfigError, match="N=4") as exc:
        parse_config('command = "evolve"\nN = 3\nfeedback = "epsilon_pair"\n')
    assert exc.value.key == "feedback"


@pytest.mark.parametrize("doc, key", [
    ("command = evolve\nfoo = 1", "foo"),
    ("command = evolve\nN = four", "N"),
    ("command = evolve\nN = 2\nN = 4", "N"),
    ("command = evolve\nOmega = -1", "Omega"),
    ("command = evolve\ngamma = 1e-3, 2e-3", "gamma"),
    ("command = fly", "command"),
    ("N = 4", "command"),
    ("command = dark-basis\nN = 5", "N"),
    ("command = concurrence-range\nN = 10", "N"),
    ("command = evolve\nfeedback = local_drive\na = 1, 2", "a"),
    ("command = scan-A\nA_grid = 1:0.1:0", "A_grid"),
    ("command = evolve\nT = 0", "T"),
])
def test_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.key == key
    assert key in str(exc.value)


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("command = evolve\njust words\n")


def test_parse_values():
    assert parse_value("pi/2") == pytest.approx(math.pi / 2)
    assert parse_value("3*pi/4") == pytest.approx(3 * math.pi / 4)
    assert parse_value("'hello'") == "hello"
    assert parse_value("true") is True
    assert parse_value("1, 2.5") == [1, 2.5]
    r = parse_value("0:pi/4:pi")
    assert isinstance(r, Range) and len(r.values()) == 5
    assert parse_value("-7") == -7


def test_comments_and_document_round_trip():
    text = "# comment\ncommand = ensemble  # trailing\nN = 2\ngamma = 0.1, 0.2\nA = pi/3\n"
    spec = parse_config(text)
    assert parse_config(spec.to_document()) == spec


def _run(tmp_path, text, *extra):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(text)
    out = tmp_path / "out.csv"
    code = cli.main(["--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, out


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_cli_config_error_exit_code(tmp_path, capsys):
    code, out = _run(tmp_path, "command = evolve\nbogus = 3\n")
    assert code == cli.EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err
    assert not out.exists()


def test_cli_missing_config_file(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "x.csv")]) == cli.EXIT_CONFIG


def test_cli_dark_basis_outputs(tmp_path):
    code, out = _run(tmp_path, "command = dark-basis\nN = 4\n")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["vector", "index", "basis", "re", "im"]
    assert {r[0] for r in rows[1:]} == {"0", "1"}
    side = json.loads((tmp_path / "out.csv.json").read_text())
    assert side["metadata"]["dark_dimension"] == 2
    assert side["rng"]["seed"] == 42 and "version" in side and side["spec"]["N"] == 4
    assert (tmp_path / "out.basis.json").exists()


def test_cli_csv_number_format(tmp_path):
    code, out = _run(tmp_path, "command = evolve\nN = 2\nT = 1\nn_samples = 3\n")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["t", "overlap", "purity", "trace", "dark_population"]
    purity = rows[2][2]
    # 17 significant digits round-trip exactly
    assert float(format(float(purity), ".17g")) == float(purity)
    assert len(rows) == 4


def test_cli_validate_writes_json(tmp_path):
    code, out = _run(tmp_path, "command = validate\nfeedback = schematic_one_way\n")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["protected"] and doc["reachable"]
    assert doc["provenance"]["spec"]["feedback"] == "schematic_one_way"


def test_cli_trajectory_rerun_from_sidecar_is_bitwise(tmp_path):
    text = "command = trajectory\nN = 4\nfeedback = epsilon_pair\neps = 0.1\ngamma = 0.01\nT = 20\ndt = 0.1\n"
    code, out = _run(tmp_path, text, "--seed", "7")
    assert code == 0
    first = out.read_text()
    side = tmp_path / "out.csv.json"
    again = tmp_path / "again.csv"
    assert cli.main(["--config", str(side), "--out", str(again), "--quiet"]) == 0
    assert again.read_text() == first
    assert json.loads(side.read_text())["spec"]["seed"] == 7


def test_cli_seed_override_changes_trajectory(tmp_path):
    text = "command = trajectory\nN = 2\ngamma = 0.05\nT = 30\ndt = 0.1\n"
    _, out = _run(tmp_path, text, "--seed", "1")
    a = out.read_text()
    _, out = _run(tmp_path, text, "--seed", "2")
    assert out.read_text() != a


def test_cli_bad_seed(tmp_path):
    code, _ = _run(tmp_path, "command = dark-basis\n", "--seed", "-1")
    assert code == cli.EXIT_CONFIG


def test_cli_non_convergence_exit_code(tmp_path):
    text = "command = scan-A\nA_grid = 1.0\nt_max = 1\n"
    code, out = _run(tmp_path, text)
    assert code == cli.EXIT_NUMERICS
    rows = _rows(out)
    assert rows[1][3:] == ["false", "false"]


def test_scan_rows_ordered_and_consistent(tmp_path):
    # eps = 0 column of the two-parameter scan equals the with-emission
    # column of the single-parameter scan
    code, out = _run(tmp_path, "command = scan-A\nA_grid = 0:pi/2:pi\n", "--threads", "2")
    assert code == 0
    a_rows = _rows(out)[1:]
    assert [float(r[0]) for r in a_rows] == pytest.approx([0, math.pi / 2, math.pi])
    code, out = _run(tmp_path, "command = scan-A-eps\nA_grid = 0:pi/2:pi\neps_grid = 0:0.1:0.1\n")
    assert code == 0
    e_rows = [r for r in _rows(out)[1:] if float(r[1]) == 0]
    for ra, re_ in zip(a_rows, e_rows):
        assert abs(float(ra[2]) - float(re_[2])) < 1e-6
    by_point = {(round(float(r[0]), 6), float(r[1])): float(r[2]) for r in _rows(out)[1:]}
    assert by_point[(round(math.pi / 2, 6), 0.1)] >= 0.9
    assert by_point[(round(math.pi, 6), 0.1)] < 0.5


def test_cli_concurrence_range(tmp_path):
    code, out = _run(tmp_path, "command = concurrence-range\nN = 4\nrestarts = 4\n")
    assert code == 0
    row = _rows(out)[1]
    assert float(row[1]) == pytest.approx(math.sqrt(7) / 2, abs=1e-4)
    assert float(row[2]) == pytest.approx(math.sqrt(2), abs=1e-4)
    side = json.loads((tmp_path / "out.csv.json").read_text())
    assert side["metadata"]["reference"]["ghz"] == pytest.approx(math.sqrt(7) / 2)


def test_cli_ensemble(tmp_path):
    code, out = _run(tmp_path, "command = ensemble\nN = 2\nT = 2\ndt = 0.5\nn_traj = 10\n")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["t", "overlap", "overlap_stderr", "purity"]
    assert len(rows) == 6
    assert np.isfinite(float(rows[1][1]))
