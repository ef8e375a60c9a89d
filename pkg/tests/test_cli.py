import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from tensorjet.cli import main

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "docs" / "multitensor.schema.json").read_text()
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def exp_file(tmp_path):
    f = tmp_path / "exp.sexp"
    f.write_text("(elem exp)")
    return str(f)


@pytest.fixture
def half_file(tmp_path):
    f = tmp_path / "half.sexp"
    f.write_text("(affine [[0.5]] [0.0])")
    return str(f)


@pytest.fixture
def sin_affine_file(tmp_path):
    f = tmp_path / "sin_affine.sexp"
    f.write_text("(compose (elem sin) (affine [[2.0]] [0.0]))")
    return str(f)


class TestTau:
    def test_exponential_tower_json(self, capsys, exp_file):
        code, out, err = run_cli(
            capsys, "tau", "--program", exp_file, "--at", "[0]", "--order", "2"
        )
        assert code == 0 and err == ""
        obj = json.loads(out)
        assert obj["tower"]["components"] == [[1], [1], [1]]
        assert obj["at"] == [0]

    def test_tower_json_validates_against_schema(self, capsys, sin_affine_file):
        code, out, _ = run_cli(
            capsys, "tau", "--program", sin_affine_file, "--at", "[0.3]", "--order", "3"
        )
        assert code == 0
        jsonschema.validate(json.loads(out)["tower"], SCHEMA)

    def test_program_from_stdin(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("(elem sin)"))
        code, out, _ = run_cli(capsys, "tau", "--program", "-", "--at", "[0]", "--order", "1")
        assert code == 0
        assert json.loads(out)["tower"]["components"] == [[0], [1]]


class TestTaylor:
    def test_output_lines(self, capsys, exp_file):
        code, out, err = run_cli(
            capsys, "taylor", "--program", exp_file, "--at", "[0]",
            "--order", "3", "--h", "0.1", "--dir", "[1]",
        )
        assert code == 0 and err == ""
        lines = out.splitlines()
        assert lines[0].startswith("series: ")
        assert lines[1].startswith("truth: ")
        assert lines[2].startswith("error: ")
        series = float(lines[0].split("[")[1].rstrip("]"))
        truth = float(lines[1].split("[")[1].rstrip("]"))
        assert series == pytest.approx(1.1051666666666666, abs=1e-15)
        assert truth == pytest.approx(math.exp(0.1), abs=1e-15)
        assert float(lines[2].split(": ")[1]) < 1e-5


class TestComposeModes:
    def test_both_modes_agree(self, capsys, half_file, sin_affine_file, tmp_path):
        code, out, _ = run_cli(
            capsys, "compose-modes", "--chain", half_file, sin_affine_file,
            "--at", "[0.3]", "--order", "2", "--mode", "both",
        )
        assert code == 0
        obj = json.loads(out)
        assert obj["max_discrepancy"] <= 1e-10
        assert obj["forward"]["components"][0][0] == pytest.approx(math.sin(0.3))
        jsonschema.validate(obj["forward"], SCHEMA)
        jsonschema.validate(obj["reverse"], SCHEMA)

    def test_single_mode_output(self, capsys, half_file, sin_affine_file):
        code, out, _ = run_cli(
            capsys, "compose-modes", "--chain", half_file, sin_affine_file,
            "--at", "[0.3]", "--order", "1", "--mode", "forward",
        )
        assert code == 0
        jsonschema.validate(json.loads(out)["tower"], SCHEMA)


class TestReduceSum:
    def test_monomial_mode_prints_value_then_polynomial(self, capsys):
        code, out, err = run_cli(capsys, "reduce-sum", "--m", "2", "--n", "3")
        assert code == 0 and err == ""
        assert out == "14\n1/3 n^3 + 1/2 n^2 + 1/6 n\n"

    def test_monomial_mode_without_count(self, capsys):
        code, out, _ = run_cli(capsys, "reduce-sum", "--m", "0")
        assert code == 0
        assert out == "n + 1\n"

    def test_velocity_line(self, capsys):
        code, out, _ = run_cli(
            capsys, "reduce-sum", "--m", "2", "--n", "3", "--velocity", "1"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "14"
        assert lines[2] == "73/6"

    def test_program_mode(self, capsys, tmp_path):
        f = tmp_path / "square.sexp"
        f.write_text("(compose (elem pow2) id)")
        code, out, _ = run_cli(
            capsys, "reduce-sum", "--program", str(f), "--at", "[0]",
            "--dir", "[1]", "--order", "3", "--n", "3",
        )
        assert code == 0
        lines = out.splitlines()
        assert float(lines[0].strip("[]")) == 14.0
        assert lines[1] == "1/3 n^3 + 1/2 n^2 + 1/6 n"

    def test_mode_flags_are_exclusive(self, capsys, exp_file):
        with pytest.raises(SystemExit) as exc:
            main(["reduce-sum", "--m", "2", "--program", exp_file, "--n", "1"])
        assert exc.value.code == 1


class TestIterate:
    def test_linear_half_program(self, capsys, half_file):
        code, out, err = run_cli(
            capsys, "iterate", "--program", half_file, "--seed", "1.0",
            "--x", "0.5", "--at", "0.2", "--order", "6",
        )
        assert code == 0 and err == ""
        lines = out.splitlines()
        assert lines[0].startswith("iterate: ") and lines[1].startswith("velocity: ")
        assert float(lines[0].split(": ")[1]) == pytest.approx(
            0.2 / math.sqrt(2), abs=1e-12
        )
        assert float(lines[1].split(": ")[1]) == pytest.approx(
            math.log(0.5) * 0.2, abs=1e-12
        )

    def test_no_fixed_point_is_a_numeric_failure(self, capsys, tmp_path):
        f = tmp_path / "shift.sexp"
        f.write_text("(affine [[1.0]] [1.0])")
        code, out, err = run_cli(
            capsys, "iterate", "--program", str(f), "--seed", "0.0",
            "--x", "0.5", "--at", "0.1", "--order", "4",
        )
        assert code == 2
        assert out == "" and "tensorjet" in err


class TestExitCodes:
    def test_missing_required_flag_is_usage_error(self, capsys, exp_file):
        with pytest.raises(SystemExit) as exc:
            main(["tau", "--program", exp_file, "--at", "[0]"])
        assert exc.value.code == 1

    def test_parse_error_is_usage_error(self, capsys, tmp_path):
        f = tmp_path / "bad.sexp"
        f.write_text("(compose (elem sin))")
        code, out, err = run_cli(capsys, "tau", "--program", str(f), "--at", "[0]", "--order", "1")
        assert code == 1
        assert out == "" and "parse error" in err

    def test_missing_file_is_usage_error(self, capsys):
        code, out, err = run_cli(
            capsys, "tau", "--program", "/nonexistent.sexp", "--at", "[0]", "--order", "1"
        )
        assert code == 1 and out == ""

    def test_domain_failure_is_numeric_error(self, capsys, tmp_path):
        f = tmp_path / "log.sexp"
        f.write_text("(elem log)")
        code, out, err = run_cli(
            capsys, "tau", "--program", str(f), "--at", "[-1]", "--order", "1"
        )
        assert code == 2 and out == ""
        assert "log" in err


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("reduce-sum", "--m", "4", "--n", "7", "--velocity", "2"),
            ("taylor", "--program", "PROG", "--at", "[0.2]", "--order", "3",
             "--h", "0.05", "--dir", "[1]"),
            ("tau", "--program", "PROG", "--at", "[0.1]", "--order", "3"),
        ],
    )
    def test_identical_invocations_identical_output(self, capsys, exp_file, argv):
        argv = [exp_file if a == "PROG" else a for a in argv]
        code1, out1, _ = run_cli(capsys, *argv)
        code2, out2, _ = run_cli(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2


class TestSelftest:
    def test_selftest_passes(self, capsys):
        code, out, _ = run_cli(capsys, "selftest")
        assert code == 0
        assert "FAIL" not in out
        assert out.count("PASS") >= 10
