import csv
import io
import subprocess
import sys

import pytest

from powerhash.cli import main, render_csv
from powerhash.core import power_hash
from powerhash.mixers import fnv1a64, mix64


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_lookup_single_bucket(capsys):
    assert run(capsys, "lookup", "--key", "12345", "--buckets", "1") == (0, "0\n")


def test_lookup_zero_key_without_premix(capsys):
    assert run(capsys, "lookup", "--key", "0", "--buckets", "16", "--no-premix") == (0, "0\n")


def test_lookup_is_repeatable(capsys):
    first = run(capsys, "lookup", "--key", "0xdeadbeef", "--buckets", "1000")
    second = run(capsys, "lookup", "--key", "0xdeadbeef", "--buckets", "1000")
    assert first == second
    assert first[1] == f"{power_hash(mix64(0xDEADBEEF), 1000)}\n"


def test_lookup_string_key(capsys):
    code, out = run(capsys, "lookup", "--key-string", "user:42", "--buckets", "50")
    assert code == 0
    assert int(out) == power_hash(mix64(fnv1a64(b"user:42")), 50)


def test_lookup_other_algorithms(capsys):
    assert run(capsys, "lookup", "--key", "17", "--buckets", "5", "--no-premix", "--algorithm", "mod") == (0, "2\n")


@pytest.mark.parametrize(
    "argv",
    [
        ["lookup", "--key", "5", "--buckets", "0"],
        ["lookup", "--key", "-1", "--buckets", "3"],
        ["lookup", "--key", "18446744073709551616", "--buckets", "3"],
        ["lookup", "--buckets", "3"],
        ["verify", "nonsense"],
        ["bench", "--keys", "10"],
        ["bench", "--reps", "2"],
        ["verify", "iterations", "--buckets", "16"],
        ["verify", "uniformity", "--buckets", "100", "--samples", "10"],
        ["rehash-sim"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_module_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "powerhash", "lookup", "--key", "7", "--buckets", "0"], capture_output=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "powerhash", "lookup", "--key", "7", "--buckets", "9"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == f"{power_hash(mix64(7), 9)}\n"


def test_verify_monotonicity(capsys):
    code, out = run(capsys, "verify", "monotonicity", "--max-buckets", "64", "--keys", "100000", "--format", "csv")
    assert code == 0
    (row,) = rows_of(out)
    assert row["violations"] == "0"


def test_verify_uniformity(capsys):
    code, out = run(capsys, "verify", "uniformity", "--buckets", "11", "--samples", "1000000", "--format", "csv")
    assert code == 0
    (row,) = rows_of(out)
    assert row["pass"] == "1" and row["n"] == "11"


def test_verify_iterations_reports_mean(capsys):
    code, out = run(capsys, "verify", "iterations", "--buckets", "11", "--format", "csv")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["mean"]) < 1.7


def test_verify_failure_exit_1(capsys):
    code, out = run(capsys, "verify", "remap", "--algorithm", "mod", "--keys", "10000")
    assert code == 1


def test_verify_g_and_f_monotonicity(capsys):
    assert run(capsys, "verify", "monotonicity", "--algorithm", "g", "--max-buckets", "20", "--keys", "2000", "--pairs", "100")[0] == 0
    assert run(capsys, "verify", "monotonicity", "--algorithm", "f", "--max-buckets", "1024", "--keys", "2000")[0] == 0


def test_verify_weighted_default_s(capsys):
    code, out = run(capsys, "verify", "weighted", "--buckets", "11", "--format", "csv")
    assert code == 0
    assert rows_of(out)[0]["lowest"] == "7"


def test_table_output_has_header(capsys):
    code, out = run(capsys, "verify", "remap", "--keys", "10000")
    assert code == 0
    assert out.startswith("# remap:")


def test_csv_file_matches_stdout(capsys, tmp_path):
    path = tmp_path / "u.csv"
    code, out = run(capsys, "verify", "uniformity", "--buckets", "3,7", "--samples", "10000", "--out", str(path), "--format", "csv")
    assert code == 0
    data = path.read_bytes()
    assert data.decode() == out
    assert b"\r" not in data
    assert len(rows_of(out)) == 2


def test_csv_number_formatting():
    text = render_csv([{"a": 3, "b": 0.123456789, "c": True, "d": 1234567.0}])
    assert text == "a,b,c,d\n3,0.123457,1,1.23457e+06\n"


def test_rehash_sim_no_outage(capsys):
    code, out = run(capsys, "rehash-sim", "--buckets", "100", "--keys", "100000", "--format", "csv")
    assert code == 0
    assert float(rows_of(out)[0]["moved_fraction"]) == 0.0


def test_rehash_sim_ten_percent(capsys):
    code, out = run(capsys, "rehash-sim", "--buckets", "100", "--unavailable-fraction", "0.1", "--keys", "1000000", "--format", "csv")
    row = rows_of(out)[0]
    assert code == 0
    assert float(row["fallback_fraction"]) <= 10 * 0.1**8
    assert row["landed_ok"] == "1000000"


def test_rehash_sim_toggle_one_bucket(capsys):
    code, out = run(capsys, "rehash-sim", "--buckets", "100", "--down", "42", "--keys", "1000000", "--format", "csv")
    assert code == 0
    assert abs(float(rows_of(out)[0]["moved_fraction"]) - 0.01) < 0.002


def test_rehash_sim_bitmap(capsys, tmp_path):
    bitmap = tmp_path / "up.txt"
    bitmap.write_text("1111011110\n")
    code, out = run(capsys, "rehash-sim", "--bitmap", str(bitmap), "--keys", "20000", "--format", "csv")
    row = rows_of(out)[0]
    assert code == 0
    assert row["n"] == "10" and row["unavailable"] == "2"
