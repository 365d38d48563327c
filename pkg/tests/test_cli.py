import csv
import json

import pytest

from sparsefoot.cli import SUMMARY_HEADER, WORKERS_ENV, main


def snapshot(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def run_twice(tmp_path, make_argv):
    outs = []
    for tag in ("a", "b"):
        root = tmp_path / tag
        root.mkdir()
        assert main(make_argv(root)) == 0
        outs.append(snapshot(root))
    assert outs[0] and outs[0] == outs[1]
    return outs[0]


SUBCOMMANDS = {
    "gen": lambda r: ["gen", "--family", "stepping-stones", "--difficulty", "10", "--seed", "7",
                      "--csv", "--out", str(r / "t")],
    "raster": lambda r: ["raster", "--difficulty", "6", "--seed", "2", "--pose", "3.0", "2.0", "0.4",
                         "--edge-field", "--out", str(r / "hm")],
    "render": lambda r: ["render", "--difficulty", "6", "--seed", "2", "--noise", "0.02",
                         "--out", str(r / "depth")],
    "reward-eval": lambda r: ["reward-eval", "--family", "beams", "--difficulty", "3", "--seed", "5",
                              "--out", str(r / "rewards.csv")],
    "schedule": lambda r: ["schedule", "sim", "--iterations", "300", "--envs", "8", "--seed", "4",
                           "--out", str(r / "schedule.csv")],
    "eval": lambda r: ["eval", "--terrain", "stones", "--difficulty", "2-4", "--runs", "20",
                       "--terrains", "4", "--seed", "3", "--out", str(r / "ev")],
}


@pytest.mark.parametrize("name", sorted(SUBCOMMANDS))
def test_subcommand_is_byte_reproducible(tmp_path, name):
    run_twice(tmp_path, SUBCOMMANDS[name])


def test_gen_outputs(tmp_path):
    files = run_twice(tmp_path, SUBCOMMANDS["gen"])
    assert {"t.sfg", "t.json", "t_heights.csv", "t_steppable.csv"} <= set(files)
    side = json.loads(files["t.json"])
    assert side["sparsity"] == pytest.approx(0.763, abs=0.005)


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["gen", "--seed", "1", "--difficulty", "9", "--randomness", "high", "--out", str(a / "t")])
    main(["gen", "--seed", "2", "--difficulty", "9", "--randomness", "high", "--out", str(b / "t")])
    assert (a / "t.sfg").read_bytes() != (b / "t.sfg").read_bytes()


def test_eval_example_has_500_rows(tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--terrain", "stones", "--difficulty", "10", "--runs", "500", "--distance", "6",
                 "--seed", "1", "--out", str(out)]) == 0
    rows = list(csv.reader((out / "summary.csv").open()))
    assert rows[0] == SUMMARY_HEADER and len(rows) == 501
    assert len((out / "episodes.jsonl").read_text().splitlines()) == 500
    assert len(list((out / "terrains").glob("*.json"))) == 10


def test_eval_output_independent_of_worker_count(tmp_path, monkeypatch):
    snaps = []
    for workers in ("1", "3"):
        monkeypatch.setenv(WORKERS_ENV, workers)
        root = tmp_path / workers
        assert main(SUBCOMMANDS["eval"](root)) == 0
        snaps.append(snapshot(root))
    assert snaps[0] == snaps[1]


def test_metrics_and_replay_from_eval_logs(tmp_path):
    ev = tmp_path / "ev"
    assert main(["eval", "--terrain", "stones", "--difficulty", "1-2", "--runs", "10", "--terrains", "2",
                 "--seed", "5", "--out", str(ev)]) == 0

    def metrics_argv(r):
        return ["metrics", "--logs", str(ev / "episodes.jsonl"), "--out", str(r / "m")]

    files = run_twice(tmp_path, metrics_argv)
    rows = list(csv.DictReader(files["m/metrics.csv"].decode().splitlines()))
    assert [r["difficulty"] for r in rows] == ["1", "2"]
    assert any(k.startswith("m/kde_") for k in files)

    def replay_argv(r):
        return ["reward-eval", "--log", str(ev / "episodes.jsonl"), "--run", "3",
                "--out", str(r / "rewards.csv")]

    (tmp_path / "replay").mkdir()
    files = run_twice(tmp_path / "replay", replay_argv)
    lines = files["rewards.csv"].decode().splitlines()
    log = json.loads((ev / "episodes.jsonl").read_text().splitlines()[3])
    assert len(lines) == 1 + len(log["steps"])


def test_losses_check_passes(capsys):
    assert main(["losses-check"]) == 0
    out = capsys.readouterr().out
    assert "kl" in out and "FAIL" not in out


def test_exit_codes(tmp_path):
    assert main(["gen", "--bogus"]) == 1
    assert main([]) == 1
    assert main(["gen", "--difficulty", "11", "--out", str(tmp_path / "x")]) == 1
    assert main(["metrics", "--logs", str(tmp_path / "missing.jsonl")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["gen", "--out", str(blocker / "sub" / "t")]) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{}\n")
    assert main(["metrics", "--logs", str(bad)]) == 1


def test_config_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"camera": {"width": 20, "height": 10}}))
    assert main(["--config", str(cfg), "render", "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d.pgm").read_bytes().split(b"\n")[2] == b"20 10"
    cfg.write_text(json.dumps({"camera": {"nope": 1}}))
    assert main(["--config", str(cfg), "render", "--out", str(tmp_path / "d")]) == 1
