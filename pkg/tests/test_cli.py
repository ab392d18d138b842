"""
Command-line and output rendering tests.
"""
import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from api.models import ProtocolReportModel, SweepRecordModel
from cli import EXIT_INVALID, EXIT_IO, EXIT_OK, main
from config import settings
from core.montecarlo import FLAG_UNRELIABLE
from core.sweep import SweepStatus
from utils.output import SWEEP_COLUMNS, format_value, key_value_csv, sweep_csv

FLAGSHIP_ARGS = ["--va", "1.5", "--vb", "2.0", "--x", "1.041"]
REPO_ROOT = Path(__file__).resolve().parents[1]


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestProtocolCommand:
    """Test the protocol subcommand."""

    def test_variance_form(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["protocol", *FLAGSHIP_ARGS, "--measure", "--quiet", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["nu"] == pytest.approx(0.9571, abs=5e-4)
        assert report["nu_m"] == pytest.approx(0.9421, abs=5e-4)
        assert report["sigma_step3"] == pytest.approx(0.3957, abs=5e-4)
        assert len(report["gamma1"]) == 6
        assert report["flags"] == []

    def test_squeezing_form_matches(self, tmp_path):
        by_variance = tmp_path / "v.json"
        by_squeezing = tmp_path / "d.json"
        main(["protocol", *FLAGSHIP_ARGS, "--quiet", "--out", str(by_variance)])
        code = main(["protocol", "--d", "0.27465", "--r", "0.07192", "--x", "1.041",
                     "--quiet", "--out", str(by_squeezing)])
        assert code == EXIT_OK
        nu_v = json.loads(by_variance.read_text())["nu"]
        nu_d = json.loads(by_squeezing.read_text())["nu"]
        assert nu_d == pytest.approx(nu_v, abs=1e-3)

    def test_swapped_variances(self, capsys):
        code = main(["protocol", "--va", "2.0", "--vb", "1.5", "--x", "1.041"])
        assert code == EXIT_INVALID
        assert "requires vB > vA" in capsys.readouterr().err

    def test_both_parameter_forms(self):
        assert main(["protocol", "--d", "0.3", "--r", "0.1", "--va", "1.5", "--vb", "2.0"]) == EXIT_INVALID

    def test_negative_noise(self):
        assert main(["protocol", "--va", "1.5", "--vb", "2.0", "--x", "-1"]) == EXIT_INVALID

    def test_zero_noise_rejected(self, capsys):
        assert main(["protocol", "--va", "1.5", "--vb", "2.0", "--x", "0", "--quiet"]) == EXIT_INVALID
        captured = capsys.readouterr()
        assert "--x must be > 0" in captured.err
        assert captured.out == ""

    def test_csv_report(self, capsys):
        assert main(["protocol", *FLAGSHIP_ARGS, "--format", "csv", "--quiet"]) == EXIT_OK
        rows = dict(_rows(capsys.readouterr().out)[1:])
        assert float(rows["nu"]) == pytest.approx(0.9571, abs=5e-4)
        assert "gamma3[5][5]" in rows

    def test_unwritable_output(self, tmp_path):
        out = tmp_path / "missing" / "report.json"
        assert main(["protocol", *FLAGSHIP_ARGS, "--quiet", "--out", str(out)]) == EXIT_IO

    def test_usage_errors(self):
        assert main(["bogus"]) == EXIT_INVALID
        assert main(["protocol", "--x", "abc"]) == EXIT_INVALID


class TestTableCommands:
    """Test threshold, robustness and sweep subcommands."""

    def test_threshold(self, capsys):
        assert main(["threshold", "--va", "1.5", "--vb", "2.0", "--quiet"]) == EXIT_OK
        header, row = _rows(capsys.readouterr().out)
        assert header == ["step", "d", "r", "u", "v", "x_th"]
        assert row[0] == "2"
        assert float(row[5]) == pytest.approx(1.04, abs=0.01)

    def test_threshold_step3(self, capsys):
        assert main(["threshold", "--va", "1.5", "--vb", "2.0", "--step", "3", "--quiet"]) == EXIT_OK
        header, row = _rows(capsys.readouterr().out)
        assert row[0] == "3"

    def test_robustness(self, capsys):
        assert main(["robustness", *FLAGSHIP_ARGS, "--quiet"]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert rows[0] == ["epsilon", "nu", "sigma_step2", "sigma_step3", "status"]
        assert len(rows) == 5
        assert float(rows[-1][1]) == pytest.approx(0.9787, abs=5e-4)

    def test_sweep_is_byte_identical(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--va-steps", "5", "--vb-steps", "7", "--quiet"]
        assert main([*args, "--out", str(first)]) == EXIT_OK
        assert main([*args, "--workers", "3", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

        rows = _rows(first.read_text())
        assert rows[0] == list(SWEEP_COLUMNS)
        assert len(rows) == 1 + 5 * 7
        assert b"\r\n" not in first.read_bytes()

    def test_sweep_fixed_x(self, capsys):
        assert main(["sweep", "--va-steps", "2", "--vb-steps", "2", "--x", "1.041", "--quiet"]) == EXIT_OK
        rows = _rows(capsys.readouterr().out)
        assert all(row[6] == "1.041" for row in rows[1:] if row[-1] != SweepStatus.INVALID_POINT.value)


class TestSampleCommand:
    """Test the Monte Carlo subcommand."""

    def test_small_sample_flagged(self, capsys):
        assert main(["sample", *FLAGSHIP_ARGS, "--n", "10", "--seed", "1", "--quiet"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert FLAG_UNRELIABLE in report["flags"]
        assert report["n"] == 10
        assert report["block_size"] == settings.MC_BLOCK_SIZE

    def test_identical_reruns(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        args = ["sample", *FLAGSHIP_ARGS, "--n", "5000", "--seed", "4", "--quiet"]
        main([*args, "--out", str(first)])
        main([*args, "--out", str(second)])
        assert first.read_bytes() == second.read_bytes()

    def test_too_few_samples(self):
        assert main(["sample", *FLAGSHIP_ARGS, "--n", "1", "--quiet"]) == EXIT_INVALID


class TestOutput:
    """Test the renderers."""

    def test_float_round_trip(self):
        for value in (1 / 3, 0.9571234567891234, 1e-17):
            assert float(format_value(value)) == value
        assert format_value(None) == ""

    def test_sweep_empty_fields(self):
        record = SweepRecordModel(vA=2.0, vB=1.5, status="invalid-point")
        rows = _rows(sweep_csv([record]))
        assert rows[1] == ["2.0", "1.5", "", "", "", "", "", "", "", "", "invalid-point"]

    def test_key_value_flattening(self, flagship_report):
        rows = dict(_rows(key_value_csv(ProtocolReportModel.from_report(flagship_report)))[1:])
        assert "params.x_sep" in rows
        assert "verdicts[0].criterion" in rows
        assert rows["witness.psd"] == "yes"


class TestStartup:
    """Test what the command line loads."""

    def test_does_not_import_web_stack(self):
        result = subprocess.run(
            [sys.executable, "-c", "import sys, cli; print('fastapi' in sys.modules)"],
            cwd=REPO_ROOT, capture_output=True, text=True, check=True,
        )
        assert result.stdout.strip() == "False"
