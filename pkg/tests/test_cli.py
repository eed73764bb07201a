import json
import subprocess
import sys

import pytest

from meshperf import __version__
from meshperf.cli import main
from meshperf.model import serialize_snapshot

from helpers import one_hop


@pytest.fixture
def snap_path(tmp_path):
    p = tmp_path / "one_hop.json"
    p.write_text(serialize_snapshot(one_hop()))
    return str(p)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert __version__ in out and "snapshot format 1" in out


def test_subcommand_required(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_estimate_single_flow(snap_path, capsys):
    assert main(["estimate", "--snapshot", snap_path]) == 0
    out = capsys.readouterr().out
    doc = json.loads(out)
    assert doc["steady"] is True
    assert '"throughput_kbps": 261.000' in out
    assert '"loss_pct": 0.000' in out
    assert '"delay_ms": 0.602' in out


def test_estimate_out_and_trace(snap_path, tmp_path):
    out, trace = tmp_path / "r.json", tmp_path / "t.txt"
    assert main(["estimate", "--snapshot", snap_path, "--out", str(out), "--trace", str(trace)]) == 0
    assert json.loads(out.read_text())["cycle_length_us"] == 31387
    assert trace.read_text().splitlines()[0] == "0 tx_start 0 0 0 602"


def test_estimate_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["estimate", "--snapshot", str(p)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_estimate_missing_file(tmp_path):
    assert main(["estimate", "--snapshot", str(tmp_path / "none.json")]) == 2


def test_estimate_semantic_error(tmp_path, capsys):
    doc = json.loads(serialize_snapshot(one_hop()))
    doc["flows"][0]["path"] = [0, 99]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert main(["estimate", "--snapshot", str(p)]) == 2
    assert "99" in capsys.readouterr().err


def test_estimate_without_window_exits_3(tmp_path, capsys):
    doc = json.loads(serialize_snapshot(one_hop(p=0.001)))
    doc["mac"]["retry_limit"] = 1
    doc["limits"]["max_sim_time_us"] = 200_000
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert main(["estimate", "--snapshot", str(p)]) == 3
    assert "window" in capsys.readouterr().err


def test_warning_goes_to_stderr(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text(serialize_snapshot(one_hop(20_000_000)))
    assert main(["estimate", "--snapshot", str(p)]) == 0
    captured = capsys.readouterr()
    assert "warning" in captured.err
    json.loads(captured.out)


def test_compare_perfect_flow(snap_path, capsys):
    assert main(["compare", "--snapshot", snap_path, "--runs", "3", "--seed", "1"]) == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    row = doc["flows"][0]
    assert abs(row["throughput_ratio"] - 1.0) <= 0.01
    assert {"loss_delta_pct", "delay_delta_ms", "estimate_throughput_kbps"} <= set(row)
    header = captured.err.splitlines()[0]
    assert "ratio" in header


def test_oracle_command_is_reproducible(snap_path, capsys):
    args = ["oracle", "--snapshot", snap_path, "--runs", "2", "--seed", "3", "--duration-us", "500000"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["seeds"] == [3, 4]


def test_gen_grid(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen", "--kind", "grid", "--rows", "3", "--cols", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["nodes"]) == 9
    cands = json.loads((tmp_path / "g.candidates.json").read_text())
    assert set(cands) == {str(f["id"]) for f in doc["flows"]}


def test_gen_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["gen", "--kind", "random", "--seed", "4", "--flows", "3",
                     "--out", str(tmp_path / f"{name}.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.candidates.json").read_bytes() == (tmp_path / "b.candidates.json").read_bytes()


def test_rank_and_inversions(tmp_path, capsys):
    snap = tmp_path / "s.json"
    assert main(["gen", "--kind", "random", "--seed", "2", "--flows", "3", "--k", "2",
                 "--out", str(snap)]) == 0
    cands = str(tmp_path / "s.candidates.json")
    rank_out = tmp_path / "rank.json"
    assert main(["rank", "--snapshot", str(snap), "--candidates", cands,
                 "--metric", "throughput", "--out", str(rank_out)]) == 0
    ranking = json.loads(rank_out.read_text())
    assert len(ranking) == 2
    assert [r["rank"] for r in ranking] == [1, 2]
    assert main(["inversions", "--predicted", str(rank_out), "--reference", str(rank_out)]) == 0
    assert json.loads(capsys.readouterr().out)["inversion_pct"] == 0.0


def test_rank_single_flow(tmp_path, capsys):
    snap = tmp_path / "s.json"
    main(["gen", "--kind", "grid", "--rows", "3", "--cols", "3", "--seed", "1", "--out", str(snap)])
    capsys.readouterr()
    assert main(["rank", "--snapshot", str(snap), "--candidates", str(tmp_path / "s.candidates.json"),
                 "--metric", "delay", "--flow", "0"]) == 0
    ids = [r["candidate_id"] for r in json.loads(capsys.readouterr().out)]
    assert all(c.startswith("f0p") for c in ids)


def test_inversions_id_mismatch(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text('["x", "y"]')
    b.write_text('["x", "z"]')
    assert main(["inversions", "--predicted", str(a), "--reference", str(b)]) == 2
    assert "z" in capsys.readouterr().err


def test_module_entry_point(snap_path):
    proc = subprocess.run([sys.executable, "-m", "meshperf", "estimate", "--snapshot", snap_path],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["flows"][0]["id"] == 0
