import csv
import json
import math

import numpy as np
import pytest

from hybridwalk.cli import main
from hybridwalk.walk_core import Spin, WalkState, state_to_csv


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_walk_hadamard_smoke(tmp_path):
    assert main(["walk", "--steps", "10", "--coin", "hadamard", "--out", str(tmp_path)]) == 0
    for name in ("step-density.csv", "schmidt.csv", "manifest.json", "final_state.csv"):
        assert (tmp_path / name).exists()
    rows = read_csv(tmp_path / "schmidt.csv")
    assert len(rows) == 11 and float(rows[0]["schmidt_norm"]) == pytest.approx(1.0)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "walk" and manifest["args"]["steps"] == 10


def test_walk_from_schedule_file(tmp_path):
    sched = tmp_path / "one-step.json"
    sched.write_text(json.dumps([{"xi": 0, "zeta": 0, "theta": math.pi / 4}]))
    out = tmp_path / "out"
    assert main(["walk", "--steps", "1", "--coin", "file", str(sched), "--out", str(out)]) == 0
    rows = read_csv(out / "schmidt.csv")
    assert float(rows[-1]["schmidt_norm"]) == pytest.approx(1.41421, abs=1e-5)


def test_walk_json_format(tmp_path):
    assert main(["walk", "--steps", "3", "--coin", "random", "--seed", "4", "--format", "json", "--out", str(tmp_path)]) == 0
    obj = json.loads((tmp_path / "walk.json").read_text())
    assert len(obj["schmidt"]) == 4 and len(obj["schedule"]) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["walk", "--steps", "0"],
        ["walk", "--coin", "spiral"],
        ["walk", "--coin", "file"],
        ["walk", "--coin", "file", "/nonexistent/schedule.json"],
        ["walk", "--theta", "4"],
        ["optimize", "--hops", "0"],
        ["tomo", "--input", "/nonexistent/state.csv"],
    ],
)
def test_usage_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["walk", "--steps", "ten"])
    assert exc.value.code == 2


def test_optimize_reaches_maximum(tmp_path, capsys):
    assert main(["optimize", "--steps", "10", "--seed", "7", "--out", str(tmp_path)]) == 0
    obj = json.loads((tmp_path / "opt_result.json").read_text())
    assert obj["schmidt_norm"] >= 1.414
    assert "best S" in capsys.readouterr().out
    sched = json.loads((tmp_path / "schedule.json").read_text())
    assert len(sched) == 10 and set(sched[0]) == {"xi", "zeta", "theta"}


def test_optimize_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["optimize", "--steps", "4", "--hops", "3", "--seed", "11", "--out", str(out)]) == 0
    for name in ("opt_result.json", "schedule.json", "hop_trace.csv", "schmidt.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    for m in (ma, mb):
        del m["args"]["out"]
    assert ma == mb


def test_optimize_reports_participation_ratio(tmp_path):
    assert main(["optimize", "--steps", "10", "--beta", "0.1", "--hops", "2", "--out", str(tmp_path)]) == 0
    obj = json.loads((tmp_path / "opt_result.json").read_text())
    assert obj["beta"] == 0.1 and 1 <= obj["participation_ratio"] <= 42


def test_batch(tmp_path):
    argv = ["batch", "--samples", "5", "--steps", "3", "--hops", "2", "--seed", "3", "--out", str(tmp_path)]
    assert main(argv) == 0
    stats = json.loads((tmp_path / "batch_stats.json").read_text())
    assert stats["n_total"] == 5 and stats["n_failed"] == 0
    assert len((tmp_path / "runs.jsonl").read_text().splitlines()) == 5


def test_spread(tmp_path):
    assert main(["spread", "--beta", "0.1", "--hops", "20", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "final_density.csv")
    pop = {int(r["site"]): float(r["density"]) for r in rows}
    assert sorted(pop) == list(range(-10, 11))
    assert all(pop[j] >= 1e-4 for j in range(-10, 11, 2))
    assert all(pop[j] == 0 for j in range(-9, 10, 2))


def test_tomo_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(7, 2)) + 1j * rng.normal(size=(7, 2))
    state = WalkState(3, a / np.linalg.norm(a))
    state_to_csv(state, tmp_path / "state.csv")
    out = tmp_path / "out"
    assert main(["tomo", "--input", str(tmp_path / "state.csv"), "--shots", "0", "--out", str(out)]) == 0
    obj = json.loads((out / "tomo.json").read_text())
    assert obj["n_shots"] is None
    assert abs(obj["schmidt_reconstructed"] - obj["schmidt_direct"]) <= 1e-10
    assert read_csv(out / "measurements.csv")[0].keys() == {"site", "I_L", "I_R", "I_D", "I_C"}


def test_tomo_with_shots(tmp_path):
    state_to_csv(WalkState.from_dict({(0, Spin.L): 0.6, (1, Spin.R): 0.8}, 1), tmp_path / "s.csv")
    argv = ["tomo", "--input", str(tmp_path / "s.csv"), "--shots", "100000", "--seed", "2", "--format", "json"]
    assert main(argv + ["--out", str(tmp_path / "o")]) == 0
    obj = json.loads((tmp_path / "o" / "tomo.json").read_text())
    assert obj["n_shots"] == 100000 and obj["abs_error"] < 0.05
    assert (tmp_path / "o" / "measurements.json").exists()
