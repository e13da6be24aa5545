import csv
import io
import json
import subprocess
import sys

import pytest

from kuznetsov_numerics import cli
from kuznetsov_numerics import experiments as ex
from kuznetsov_numerics.errors import InvalidValue, TailNotNegligible, UsageError


def test_defaults():
    cfg = cli.parse_args(["pv"], env={})
    assert cfg.threads == 1 and cfg.format == "csv" and cfg.output is None
    assert cfg.v_support == (1.0, 6.0) and not cfg.record_timings


def test_limit_requires_indices():
    with pytest.raises(UsageError):
        cli.parse_args(["run-limit", "--l", "1"], env={})
    cfg = cli.parse_args(["run-limit", "--l", "1", "--lp", "2"], env={})
    assert cfg.ladder == cli.DEFAULT_LADDERS["run-limit"]


@pytest.mark.parametrize(
    "argv",
    [
        ["nope"],
        ["pv", "--threads", "0"],
        ["pv", "--threads", "two"],
        ["pv", "--v-support", "3,1"],
        ["pv", "--v-support", "1"],
        ["pv", "--k-max", "61"],
        ["pv", "--t-max", "-1"],
        ["pv", "--format", "xml"],
        ["run-a0", "--l", "1", "--lp", "1", "--x", "50,100"],
        ["run-a0", "--l", "1", "--lp", "1", "--x", "1000,100"],
        ["run-limit", "--l", "0", "--lp", "1"],
    ],
)
def test_bad_arguments_are_usage_errors(argv):
    with pytest.raises(UsageError):
        cli.parse_args(argv, env={})


def test_invalid_value_is_a_usage_error():
    assert issubclass(InvalidValue, UsageError)


def test_precedence_flag_over_config_over_env(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nthreads = 3\nt-max = 12  # trailing\nx = 100,200\n")
    env = {cli.THREADS_ENV: "5"}
    assert cli.parse_args(["pv"], env=env).threads == 5
    cfg = cli.parse_args(["run-a0", "--l", "1", "--lp", "1", "--config", str(conf)], env=env)
    assert cfg.threads == 3 and cfg.t_max == 12.0 and cfg.ladder == (100.0, 200.0)
    cfg = cli.parse_args(["pv", "--config", str(conf), "--threads", "7"], env=env)
    assert cfg.threads == 7


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("threads\n")
    with pytest.raises(UsageError):
        cli.read_config(str(bad))
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        cli.parse_args(["pv", "--config", str(bad)], env={})
    with pytest.raises(UsageError):
        cli.read_config(str(tmp_path / "missing.conf"))


def test_csv_and_json_carry_the_same_rows():
    rep = ex.verify_pv(k_values=(-14, 14))
    rows = list(csv.DictReader(io.StringIO(cli.to_csv(rep))))
    data = json.loads(cli.to_json(rep))
    assert list(rows[0]) == rep.columns == data["columns"]
    for r_csv, r_json in zip(rows, data["rows"]):
        for col in rep.columns:
            assert float(r_csv[col]) == r_json[col]
    assert "\r" not in cli.to_csv(rep)


def test_float_cells_round_trip():
    assert float(cli._cell(0.1 + 0.2)) == 0.1 + 0.2
    assert cli._cell(True) == "true"


def test_exit_codes():
    ok = ex.ExperimentReport("a", ["x"])
    ok.check("c", True, 0, 1)
    bad = ex.ExperimentReport("b", ["x"])
    bad.check("c", False, 2, 1)
    stuck = ex.ExperimentReport("c", ["x"], metadata={"converged": False})
    assert cli.exit_code([ok]) == 0
    assert cli.exit_code([ok, bad]) == 1
    assert cli.exit_code([bad, stuck]) == 3


def test_main_usage_error_returns_2(capsys):
    assert cli.main(["run-limit"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_main_numerical_failure_returns_3(monkeypatch):
    def boom(*a, **k):
        raise TailNotNegligible("synthetic")

    monkeypatch.setattr(ex, "verify_pv", boom)
    assert cli.main(["pv"]) == 3


def test_main_pv_writes_csv(tmp_path):
    out = tmp_path / "pv.csv"
    assert cli.main(["pv", "--output", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("k,re,im,limit_im,deviation,error_estimate\n")


def test_empty_ladder_gives_header_only_csv(tmp_path):
    out = tmp_path / "limit.csv"
    assert cli.main(["run-limit", "--l", "1", "--lp", "1", "--x", "", "--output", str(out)]) == 0
    assert out.read_text() == ",".join(ex.LIMIT_COLUMNS) + "\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kuznetsov_numerics", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "verify-arith" in proc.stdout
