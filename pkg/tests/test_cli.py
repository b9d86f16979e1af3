import csv
import io
import math
import shutil
import subprocess
import sys

import pytest

from fracvar import cli, sampler


def run_cli(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_example(tmp_path):
    out = tmp_path / "path.csv"
    code = cli.run("simulate --process fbm --hurst 0.5 --level 10 --t 1.0 --seed 42 --out".split() + [str(out)])
    assert code == 0
    data = rows(out.read_text())
    assert len(data) == 1025
    assert list(data[0])[:2] == ["t", "value"]
    assert float(data[0]["t"]) == 0.0 and float(data[0]["value"]) == 0.0
    assert float(data[-1]["t"]) == 1.0
    assert {r["seed"] for r in data} == {"42"} and data[0]["method"] == "auto"


def test_qv_bifbm_example(capsys):
    code, out, _ = run_cli(
        capsys, *"qv --process bifbm --hurst 0.6 --k 0.5 --n 4096 --t 1.0 --seed 7 --weight-exponent auto".split()
    )
    assert code == 0
    (row,) = rows(out)
    assert list(row) == cli.STAT_COLUMNS
    assert float(row["reference"]) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert float(row["rel_error"]) < 0.10
    assert float(row["param"]) == pytest.approx(-0.4)
    assert row["stat"] == "weighted" and row["level"] == "12" and row["order"] == ""


def test_qv_default_stat_is_pvar(capsys):
    code, out, _ = run_cli(capsys, *"qv --process fbm --hurst 0.5 --level 12 --seed 3 --paths 3".split())
    assert code == 0
    data = rows(out)
    assert [r["seed"] for r in data] == ["3", "4", "5"]
    assert all(r["stat"] == "pvar" and float(r["reference"]) == 1.0 for r in data)


def test_qv_scaled_uses_calibration(capsys):
    code, out, _ = run_cli(capsys, *"qv --process trifbm --hurst 0.4 --k 0.5 --level 9 --stat scaled".split())
    assert code == 0
    (row,) = rows(out)
    assert float(row["param"]) == pytest.approx(0.4, abs=1e-6)
    assert row["reference"] != ""
    # an explicit --alpha selects the scaled statistic
    _, out, _ = run_cli(capsys, *"qv --process trifbm --hurst 0.4 --k 0.5 --level 9 --alpha 0.2".split())
    (row,) = rows(out)
    assert row["stat"] == "scaled" and float(row["reference"]) == 0.0


def test_qv_kurchenko(capsys):
    code, out, _ = run_cli(capsys, *"qv --process fbm --hurst 0.3 --n 512 --stat kurchenko --seed 1".split())
    assert code == 0
    (row,) = rows(out)
    assert row["n"] == "512"
    assert float(row["reference"]) == pytest.approx(2**1.4 - 1)


def test_expected_qv(capsys):
    code, out, _ = run_cli(capsys, *"expected-qv --process bifbm --hurst 0.6 --k 0.5 --n 4096".split())
    assert code == 0
    (row,) = rows(out)
    assert float(row["rel_error"]) < 0.02 and row["seed"] == ""
    code, out, _ = run_cli(capsys, *"expected-qv --process fbm --hurst 0.5 --n 100 --t 2.0 --stat pvar".split())
    assert float(rows(out)[0]["value"]) == pytest.approx(2.0, rel=1e-14)


def test_estimate_hurst(capsys):
    code, out, _ = run_cli(capsys, "estimate-hurst", "--value", "1.0")
    assert code == 0 and float(rows(out)[0]["value"]) == 0.5
    code, out, _ = run_cli(capsys, *"estimate-hurst --hurst 0.7 --n 1024 --paths 2".split())
    assert code == 0
    assert all(abs(float(r["value"]) - 0.7) < 0.05 for r in rows(out))


def test_discriminate(capsys):
    code, out, _ = run_cli(capsys, *"discriminate --process fbm --hurst 0.3 --alt-hurst 0.7 --n 512 --seed 2".split())
    assert code == 0
    data = rows(out)
    assert [r["stat"] for r in data] == ["discrepancy_kurchenko"] * 2 + ["selected"]
    assert data[-1]["param"] == "fbm(H=0.3)"
    assert {r["n"] for r in data} == {"512"}


def test_power_trifbm_example(capsys):
    code, out, _ = run_cli(
        capsys, *"power --process trifbm --hurst 0.5 --k 0.8 --alt-hurst 0.4 --alt-k 0.5 --level 12 --paths 50 --seed 1".split()
    )
    assert code == 0
    (row,) = rows(out)
    assert row["stat"] == "rate" and float(row["value"]) >= 0.9


def test_power_records(capsys):
    code, out, _ = run_cli(
        capsys, *"power --process bifbm --hurst 0.6 --k 0.5 --alt-k 0.9 --n 256 --paths 4 --seed 10 --records".split()
    )
    assert code == 0
    data = rows(out)
    assert [r["seed"] for r in data] == ["10", "11", "12", "13", "10"]


def test_calibrate(capsys):
    code, out, _ = run_cli(capsys, "calibrate-trifbm")
    assert code == 0
    data = rows(out)
    assert [(r["H"], r["K"], r["matched"]) for r in data] == [("0.5", "0.8", "2HK"), ("0.4", "0.5", "2HK")]


def test_byte_identical_output(capsys):
    argv = "simulate --process trifbm --hurst 0.4 --k 0.5 --level 7 --seed 5".split()
    outputs = [run_cli(capsys, *argv)[1] for _ in range(2)]
    assert outputs[0] == outputs[1] and outputs[0]
    argv = "power --process fbm --hurst 0.3 --alt-hurst 0.7 --n 128 --paths 5 --seed 9 --records".split()
    outputs = [run_cli(capsys, *argv)[1] for _ in range(2)]
    assert outputs[0] == outputs[1]


def test_floats_round_trip(capsys):
    _, out, _ = run_cli(capsys, *"simulate --process fbm --hurst 0.3 --n 16 --seed 1".split())
    values = [r["value"] for r in rows(out)]
    assert all(repr(float(v)) == v for v in values)


@pytest.mark.parametrize(
    "argv, needle",
    [
        ("simulate --process fbm --hurst 1.5 --level 4", "H"),
        ("simulate --process bifbm --hurst 0.5 --level 4", "--k"),
        ("simulate --process fbm --hurst 0.5", "--level"),
        ("simulate --process bifbm --hurst 0.5 --k 0.5 --level 17", "level"),
        ("qv --process bifbm --hurst 0.5 --k 0.5 --n 8 --stat kurchenko", "kurchenko"),
        ("estimate-hurst --value 3.5", "(0, 3)"),
        ("discriminate --process bifbm --hurst 0.6 --k 0.5 --alt-hurst 0.3 --n 64", "K_1 = K_2"),
        ("power --process fbm --hurst 0.3 --alt-hurst 0.7 --n 64 --paths 0", "paths"),
        ("qv --process fbm --hurst 0.5 --n 8 --weight-exponent abc", "weight-exponent"),
    ],
)
def test_invalid_parameters_exit_2(capsys, argv, needle):
    code, out, err = run_cli(capsys, *argv.split())
    assert code == 2 and out == ""
    assert needle in err


def test_unknown_flag_exit_2(capsys):
    assert run_cli(capsys, "simulate", "--bogus")[0] == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    monkeypatch.setattr(sampler, "JITTER_LADDER", (0.0,))
    sampler._factors.clear()
    code, _, err = run_cli(capsys, *"simulate --process nfbm --order 3 --hurst 2.95 --n 256".split())
    sampler._factors.clear()
    assert code == 3 and "positive definite" in err


def test_io_failure_exit_1(capsys, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    code, _, err = run_cli(capsys, *"simulate --hurst 0.5 --level 3 --out".split(), str(target))
    assert code == 1 and "cannot write" in err


def test_console_script():
    exe = shutil.which("fracvar")
    cmd = [exe] if exe else [sys.executable, "-m", "fracvar"]
    proc = subprocess.run(
        cmd + "simulate --hurst 0.5 --level 2 --seed 3".split(), capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("t,value,")
    assert len(proc.stdout.splitlines()) == 6
