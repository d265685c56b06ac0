import csv
import json

import pytest

from trajanomaly.cli import COMMANDS, dispatch


def test_buffer_command(capsys):
    assert dispatch(["buffer", "--window", "0.2"]) == 0
    assert capsys.readouterr().out.strip() == "window 0.2 s: buffer 8.8 s, distance 236.0 m"


def test_buffer_non_positive_is_error(capsys):
    assert dispatch(["buffer", "--window", "9"]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert dispatch(["frobnicate"]) == 2


@pytest.mark.parametrize("cmd", sorted(COMMANDS))
def test_help_on_every_subcommand(cmd, capsys):
    assert dispatch([cmd, "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_invalid_config_reports_all_violations(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("sample_rate_hz = 0\nprediction_stride = 0\n")
    (tmp_path / "t.csv").write_text("frame,track_id,class_id,cx,cy,w,h,label\n")
    rc = dispatch(["condition", "--config", str(cfg), "--in", str(tmp_path / "t.csv"),
                   "--out", str(tmp_path / "o.csv")])
    err = capsys.readouterr().err
    assert rc == 1 and "ZeroSampleRate" in err and "InvalidStride" in err


def test_offline_chain(tmp_path):
    t, c, p, s, r = (tmp_path / n for n in ("t.csv", "c.csv", "p.jsonl", "s.csv", "r.csv"))
    assert dispatch(["synth", "--out", str(t), "--seed", "2", "--duration", "40",
                     "--kind", "abrupt_halt", "--fraction", "0.2", "--onset", "2"]) == 0
    assert dispatch(["condition", "--in", str(t), "--out", str(c)]) == 0
    assert dispatch(["predict", "--in", str(c), "--out", str(p)]) == 0
    first = json.loads(p.read_text().splitlines()[0])
    assert set(first) == {"track_id", "anchor_frame", "anchor", "horizon"}
    assert len(first["horizon"]) == 25
    assert dispatch(["score", "--tracks", str(c), "--preds", str(p), "--out", str(s)]) == 0
    assert dispatch(["eval", "--scores", str(s), "--tracks", str(c), "--out", str(r),
                     "--roc-dir", str(tmp_path / "roc")]) == 0
    rows = list(csv.DictReader(r.open()))
    assert len(rows) == 18
    assert all(0.0 <= float(row["auc"]) <= 1.0 for row in rows)
    assert len(list((tmp_path / "roc").iterdir())) == 18


def test_pipeline_command_emits_jsonl(tmp_path, capsys):
    t = tmp_path / "t.csv"
    assert dispatch(["synth", "--out", str(t), "--seed", "1", "--duration", "30",
                     "--fraction", "0.3", "--onset", "2"]) == 0
    capsys.readouterr()
    rep = tmp_path / "rep.json"
    assert dispatch(["pipeline", "--in", str(t), "--ade-threshold", "5",
                     "--report-out", str(rep)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(json.loads(x)["score"] > 5 for x in lines if json.loads(x)["method"] == "ade")
    assert json.loads(rep.read_text())["predictions"] > 0


def test_bench_command(tmp_path):
    out = tmp_path / "b.json"
    assert dispatch(["bench", "--duration", "10", "--vehicles-per-s", "5", "--repetitions", "1",
                     "--out", str(out)]) == 0
    assert json.loads(out.read_text())["trajectories_per_s"] > 0
