import csv
import json
import subprocess
import sys

import pytest

from omniqueue import cli
from omniqueue import queue_core as qc


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sample_json_is_reproducible(capsys):
    a = run(capsys, "--mode", "sample", "--seed", "7", "--c", "3", "--lambda", "2.4")
    b = run(capsys, "--mode", "sample", "--seed", "7", "--c", "3", "--lambda", "2.4")
    assert a == b and a[0] == 0
    rec = json.loads(a[1])
    assert rec["schema"] == cli.SAMPLE_SCHEMA and rec["seed"] == 7
    assert set(rec) >= {"c", "lambda", "mu", "samples", "betas", "T", "Tc", "doublings"}
    assert len(rec["samples"]["m=0"]) == 3


def test_unstable_exits_2(capsys):
    code, out, err = run(capsys, "--mode", "sample", "--c", "2", "--lambda", "2", "--mu", "1")
    assert code == 2 and "unstable" in err and out == ""


@pytest.mark.parametrize("argv", [["--runs", "0"], ["--m-list", "1,0"], ["--beta-list", "2"],
                                  ["--t0", "1"], ["--mode", "experiment"]])
def test_invalid_config_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_beta_one_equals_base_sample(capsys):
    code, out, _ = run(capsys, "--mode", "sample", "--m-list", "0", "--beta-list", "1", "--seed", "3")
    rec = json.loads(out)
    assert rec["samples"]["m=0"] == rec["betas"]["beta=1.0"]


def test_aborted_sample_exits_3(capsys):
    code, out, err = run(capsys, "--mode", "sample", "--run-id", "1", "--max-doublings", "0")
    assert code == 3 and out == ""


def test_aborted_experiment_removes_output(capsys, tmp_path):
    out = tmp_path / "exp"
    code, _, _ = run(capsys, "--mode", "experiment", "--runs", "20", "--max-doublings", "0",
                     "--out-dir", str(out))
    assert code == 3 and not out.exists()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_experiment_tables(capsys, tmp_path):
    code, _, _ = run(capsys, "--mode", "experiment", "--runs", "30", "--m-list", "0,1",
                     "--beta-list", "0.5", "--out-dir", str(tmp_path))
    assert code == 0
    ext = read_csv(tmp_path / "extensions.csv")
    assert ext[0] == ["run_id", "T_final", "Tc", "doublings_coalesce", "doublings_condition"]
    assert [r[0] for r in ext[1:]] == [str(i) for i in range(30)]
    means = read_csv(tmp_path / "means.csv")
    assert means[0] == ["m", "coordinate", "mean", "stderr"]
    assert [r[:2] for r in means[1:]] == [["0", "1"], ["0", "2"], ["1", "1"], ["1", "2"],
                                         ["1", "3"], ["beta=0.5", "1"], ["beta=0.5", "2"]]
    cdf = read_csv(tmp_path / "cdf.csv")
    assert cdf[0] == ["m", "coordinate", "x", "F(x)"]
    last = {}
    for m, k, x, f in cdf[1:]:
        last[(m, k)] = f
    assert set(last.values()) == {"1.0"}


def test_single_run_gives_one_row_per_coordinate(capsys, tmp_path):
    assert run(capsys, "--mode", "experiment", "--runs", "1", "--out-dir", str(tmp_path))[0] == 0
    assert len(read_csv(tmp_path / "extensions.csv")) == 2
    assert len(read_csv(tmp_path / "means.csv")) == 3
    assert len(read_csv(tmp_path / "cdf.csv")) == 3


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "sample", "c": 3, "lambda": 2.4, "seed": 5}))
    _, out, _ = run(capsys, "--config", str(cfg), "--seed", "6")
    rec = json.loads(out)
    assert rec["c"] == 3 and rec["lambda"] == 2.4 and rec["seed"] == 6
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "--config", str(bad))[0] == 2


def test_omni_mode_jsonl_matches_threads(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "--mode", "omni", "--runs", "12", "--m-list", "0,2", "--out-dir", str(a))[0] == 0
    assert run(capsys, "--mode", "omni", "--runs", "12", "--m-list", "0,2", "--threads", "2",
               "--out-dir", str(b))[0] == 0
    assert (a / "records.jsonl").read_bytes() == (b / "records.jsonl").read_bytes()
    lines = (a / "records.jsonl").read_text().splitlines()
    assert [json.loads(x)["run_id"] for x in lines] == list(range(12))


def test_verify_upper_flag(capsys, tmp_path):
    assert run(capsys, "--mode", "omni", "--runs", "10", "--m-list", "0,1,5",
               "--verify-upper", "--out-dir", str(tmp_path))[0] == 0


def test_svg_output_is_deterministic(capsys, tmp_path):
    for name in ("a", "b"):
        assert run(capsys, "--mode", "experiment", "--runs", "20", "--svg",
                   "--out-dir", str(tmp_path / name))[0] == 0
    for fig in ("extensions.svg", "means.svg", "cdf.svg"):
        assert (tmp_path / "a" / fig).read_bytes() == (tmp_path / "b" / fig).read_bytes()


def test_validate_passes_at_small_scale(capsys):
    code, out, _ = run(capsys, "--mode", "validate", "--scale", "0.01")
    assert code == 0 and out.count("[PASS]") == 7


def test_validate_catches_corrupted_tie_break(capsys):
    code, out, _ = run(capsys, "--mode", "validate", "--scale", "0.05", "--corrupt-tie-break")
    assert code == 1
    assert "[FAIL] tracker equivalence" in out and "counterexample" in out
    assert not qc._CORRUPT_TIE_BREAK


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "omniqueue", "--mode", "sample", "--seed", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["seed"] == 1
