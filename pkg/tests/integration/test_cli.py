"""
End-to-end tests of the command-line entry point.
"""

import csv
import io

import pytest
import yaml

from src.main import main
from src.utils.errors import ExitCode


@pytest.fixture
def small_config(tmp_path):
    """Configuration file with a coarse map grid."""
    path = tmp_path / "config.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "map_grid": {"d_min": -1.0, "d_max": 1.0, "d_step": 0.5, "cfl_points": 4},
                "threads": 1,
            }
        )
    )
    return str(path)


def _csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_periodic_cfl(capsys):
    """Test the periodic table for p = 0, 1."""
    assert main(["periodic-cfl", "--p", "1"]) == ExitCode.SUCCESS
    rows = _csv(capsys.readouterr().out)
    assert rows[0] == ["p", "cfl_max", "estimate"]
    assert [row[0] for row in rows[1:]] == ["0", "1"]
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-5)
    assert float(rows[2][1]) < float(rows[1][1])


def test_periodic_cfl_curves(tmp_path, capsys):
    """Test that --out receives the amplification curves."""
    out = tmp_path / "curves.csv"
    assert main(["periodic-cfl", "--p", "0", "--out", str(out)]) == ExitCode.SUCCESS
    rows = _csv(out.read_text())
    assert rows[0] == ["p", "cfl", "max_amp"]
    assert len(rows) == 201
    capsys.readouterr()


def test_eigen(capsys):
    """Test the P1 ROD-E spectrum at d = 0."""
    assert main(["eigen", "--p", "1", "--method", "rod-e", "--d", "0"]) == ExitCode.SUCCESS
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5
    assert lines[-1].startswith("max_re_lambda ")
    assert float(lines[-1].split()[1]) < 0.0


def test_eigen_periodic(capsys):
    """Test that the periodic spectrum touches the imaginary axis."""
    assert main(["eigen", "--p", "2", "--periodic", "--cells", "3"]) == ExitCode.SUCCESS
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10
    assert float(lines[-1].split()[1]) == pytest.approx(0.0, abs=1e-10)


def test_stability_map_csv_and_svg(tmp_path, small_config, capsys):
    """Test a map written as CSV with an SVG companion."""
    out = tmp_path / "map.csv"
    code = main(
        [
            "stability-map",
            "--p",
            "1",
            "--method",
            "rod-l2",
            "--integrator",
            "implicit",
            "--cfl-hi",
            "10",
            "--format",
            "svg",
            "--out",
            str(out),
            "--config",
            small_config,
        ]
    )
    assert code == ExitCode.SUCCESS
    rows = _csv(out.read_text())
    assert rows[0][:3] == ["p", "kind", "integrator"]
    assert len(rows) == 1 + 5 * 4
    assert rows[-1][4] == "10.0"
    assert (tmp_path / "map.svg").read_text().count("<rect") == 20
    capsys.readouterr()


def test_converge(capsys):
    """Test a short stable study."""
    code = main(["converge", "--p", "1", "--d", "-1", "--cfl", "1", "--meshes", "10", "20"])
    assert code == ExitCode.SUCCESS
    rows = _csv(capsys.readouterr().out)
    assert rows[0][5:8] == ["Ne", "l2_error", "eoa"]
    assert [row[5] for row in rows[1:]] == ["10", "20"]
    assert rows[1][7] == ""
    assert float(rows[2][7]) > 1.5


def test_converge_unstable(capsys):
    """Test that a diverging study exits with the unstable code."""
    code = main(["converge", "--p", "1", "--d", "0.9", "--cfl", "0.5", "--meshes", "10", "20"])
    assert code == ExitCode.UNSTABLE
    rows = _csv(capsys.readouterr().out)
    assert rows[1][6] == "nan"


def test_converge_rod_w(tmp_path, capsys):
    """Test a rod-w run with a weight file."""
    weight = tmp_path / "weight.yaml"
    weight.write_text(yaml.safe_dump({"weight": [[1.0, 0.0], [0.0, 1.0]]}))
    code = main(
        ["converge", "--p", "1", "--method", "rod-w", "--weight", str(weight), "--meshes", "10"]
    )
    assert code == ExitCode.SUCCESS
    assert len(_csv(capsys.readouterr().out)) == 2


def test_verify_equivalence(capsys):
    """Test the equivalence report."""
    code = main(["verify-equivalence", "--seed", "3", "--instances", "5", "--threads", "1"])
    assert code == ExitCode.SUCCESS
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert lines[0].startswith("rod-e 5 ")
    assert float(lines[-1].split()[1]) <= 1e-10


@pytest.mark.parametrize(
    "argv",
    [
        ["eigen", "--bogus"],
        ["no-such-command"],
        ["eigen", "--p", "1", "--d", "2"],
        ["eigen", "--p", "13"],
        ["converge", "--p", "1", "--method", "rod-w"],
        ["stability-map", "--p", "1", "--format", "svg"],
        ["verify-equivalence", "--instances", "0"],
        ["converge", "--p", "1", "--weight", "missing.yaml", "--method", "rod-w"],
    ],
)
def test_invalid_input(argv, capsys):
    """Test that invalid input exits with code 1 and a message on stderr."""
    assert main(argv) == ExitCode.VALIDATION
    assert "error [" in capsys.readouterr().err


def test_missing_config_file(capsys):
    """Test that an unreadable --config is invalid input."""
    code = main(["periodic-cfl", "--p", "0", "--config", "missing.yaml"])
    assert code == ExitCode.VALIDATION
    capsys.readouterr()
