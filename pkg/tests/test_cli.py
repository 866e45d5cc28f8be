import csv
import io
import json

import pytest
from click.testing import CliRunner

from gl2modp.cli import ConfigError, build_config, main, read_config_file, validate

BASE = ["--p", "7", "--f", "2", "--e", "1", "--r", "3,3"]


def invoke(*args):
    return CliRunner().invoke(main, list(args))


class TestExitCodes:
    def test_pass_is_zero(self):
        res = invoke("weight-set", *BASE)
        assert res.exit_code == 0, res.output
        assert json.loads(res.output)["status"] == "pass"

    def test_failed_claim_is_one(self):
        res = invoke("verify", "--p", "7", "--f", "2", "--e", "1", "--r", "0,3", "--suite", "schedule")
        assert res.exit_code == 1
        doc = json.loads(res.output)
        assert doc["status"] == "fail"

    @pytest.mark.parametrize("args", [
        ["weight-set", "--p", "6", "--f", "1", "--e", "1", "--r", "2"],
        ["weight-set", "--p", "7", "--f", "2", "--e", "1", "--r", "3"],
        ["weight-set", "--p", "7", "--f", "1", "--e", "1", "--r", "9"],
        ["weight-set", "--p", "7", "--f", "2", "--r", "3,3"],
        ["invariants", *BASE],
        ["quotient", "--p", "11", "--f", "1", "--e", "1", "--r", "5"],
        ["quotient", *BASE, "--suite", "nonsense"],
        ["weight-set", *BASE, "--format", "xml"],
        ["weight-set", "--p", "7", "--f", "2", "--e", "1", "--r", "3,x"],
    ])
    def test_config_errors_are_two(self, args):
        res = invoke(*args)
        assert res.exit_code == 2
        assert "config error" in res.output


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# example\np = 7\nf: 2\ne = 1\nr = 3,3\nformat = csv\n")
        cfg = build_config("weight-set", str(path), p=None, f=None, e=None, r_vec="2,4", w=None, radius=None,
                           stages=None, suite=None, fmt=None, out=None, seed=None)
        assert (cfg.p, cfg.f, cfg.r_vec, cfg.fmt) == (7, 2, (2, 4), "csv")

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("prime = 7\n")
        with pytest.raises(ConfigError, match="unknown key"):
            read_config_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(str(tmp_path / "absent.cfg"))

    def test_no_defaults_for_weight(self):
        cfg = build_config("weight-set", None, p=7, f=2, e=None, r_vec="3,3", w=None, radius=None,
                           stages=None, suite=None, fmt=None, out=None, seed=None)
        with pytest.raises(ConfigError, match="missing"):
            validate(cfg)

    def test_cli_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("p = 7\nf = 2\ne = 1\nr = 3,3\n")
        res = invoke("weight-set", "--config", str(path), "--format", "text")
        assert res.exit_code == 0
        assert res.output.splitlines()[0].endswith("PASS")


class TestFormats:
    def test_csv_rows(self):
        res = invoke("weight-set", *BASE, "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(res.output)))
        assert len(rows) == 4
        assert {row["r"] for row in rows} == {"24", "16", "10", "30"}

    def test_text(self):
        res = invoke("quotient", *BASE, "--format", "text")
        assert res.exit_code == 0
        assert "PASS" in res.output.splitlines()[0]

    def test_out_file(self, tmp_path):
        out = tmp_path / "ws.json"
        res = invoke("weight-set", *BASE, "--out", str(out))
        assert res.exit_code == 0 and res.output == ""
        assert json.loads(out.read_text())["status"] == "pass"

    def test_ramified_table(self):
        res = invoke("weight-set", "--p", "11", "--f", "2", "--e", "2", "--r", "5,5", "--format", "csv")
        assert res.exit_code == 0
        assert len(res.output.strip().splitlines()) == 17


class TestDeterminism:
    @pytest.mark.parametrize("args", [
        ["weight-set", *BASE],
        ["quotient", *BASE],
        ["verify", *BASE, "--suite", "schedule", "--seed", "3"],
        ["invariants", "--p", "7", "--f", "1", "--e", "1", "--r", "3", "--radius", "2"],
    ])
    def test_byte_identical(self, args):
        a, b = invoke(*args), invoke(*args)
        assert a.exit_code == 0
        assert a.output == b.output

    def test_invariants_document(self):
        res = invoke("invariants", "--p", "7", "--f", "1", "--e", "2", "--r", "3", "--radius", "2")
        doc = json.loads(res.output)
        assert res.exit_code == 0 and doc["status"] == "pass"


def test_module_entry_point():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "gl2modp", "weight-set", *BASE, "--format", "text"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert "PASS" in out.stdout
