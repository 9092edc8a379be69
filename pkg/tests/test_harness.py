from __future__ import annotations

import csv
import json

import pytest

from legalsim import cli, harness
from legalsim.macro import read_decisions, recount


def _trial(path, welfare_by_turn, events=()):
    path.mkdir(parents=True)
    with open(path / "welfare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["turn", "laborer_id", "welfare", "cash", "wage", "hours", "safety"])
        for turn, values in welfare_by_turn.items():
            for i, v in enumerate(values):
                w.writerow([turn, f"Laborer-{i + 1}", v, 0, 0, 0, 0])
    (path / "events.jsonl").write_text("".join(json.dumps(e) + "\n" for e in events))
    return path


def _ev(kind, **payload):
    return {"turn": 1, "phase": "x", "actor": "a", "kind": kind, "payload": payload}


@pytest.mark.parametrize(
    "event, expected",
    [
        (_ev("work_status", status="NOT WORKING", rule="rule1", action="Strike"), "protest_sabotage"),
        (_ev("work_status", status="NOT WORKING", rule="rule2", action="Sabotage"), "protest_sabotage"),
        (_ev("work_status", status="NOT WORKING", rule="contradiction", action="Work and strike"), "protest_sabotage"),
        (_ev("work_status", status="NOT WORKING", rule="rule3", action="Sue the company"), "other"),
        (_ev("work_status", status="WORKING", rule="default", action="Work my shift"), "normal_work"),
        (_ev("work_status", status="WORKING", rule="rule3", action="Negotiate a raise with management"), "other"),
        (_ev("lawsuit_filed", filer_kind="laborer"), "laborer_litigation"),
        (_ev("lawsuit_filed", filer_kind="company"), "company_litigation"),
        (_ev("verdict", verdict="guilty"), "other"),
    ],
)
def test_classify_event(event, expected):
    assert harness.classify_event(event) == expected
    assert harness.classify_event(json.dumps(event)) == expected


def test_single_trial_has_zero_sd(tmp_path):
    d = _trial(tmp_path / "trial_00", {0: [50.0], 1: [60.0]})
    stats = harness.aggregate_trials([d])
    assert stats.welfare_mean == [50.0, 60.0] and stats.welfare_sd == [0.0, 0.0]


def test_two_trials_pool_mean_and_sd(tmp_path):
    strike = _ev("work_status", status="NOT WORKING", rule="rule1", action="Strike")
    a = _trial(tmp_path / "trial_00", {1: [50.0]}, [strike, strike])
    b = _trial(tmp_path / "trial_01", {1: [70.0]}, [])
    stats = harness.aggregate_trials([a, b], tmp_path)
    assert stats.welfare_mean == [60.0] and stats.welfare_sd == [10.0] and stats.welfare_n == [2]
    assert stats.event_mean["protest_sabotage"] == 1.0 and stats.event_sd["protest_sabotage"] == 1.0
    rows = list(csv.DictReader(open(tmp_path / "mean_sd.csv")))
    assert rows == [{"turn": "1", "mean": "60.0", "sd": "10.0", "n": "2"}]
    doc = json.loads((tmp_path / "stats.json").read_text())
    assert doc["notes"]["negotiation"]


def test_aggregate_needs_trials():
    with pytest.raises(ValueError):
        harness.aggregate_trials([])
    assert harness.mean_sd([]) == (0.0, 0.0)


def test_config_hash_is_order_independent():
    assert harness.config_hash({"a": 1, "b": 2}) == harness.config_hash({"b": 2, "a": 1})
    assert harness.config_hash({"a": 1}) != harness.config_hash({"a": 2})


# --- CLI ---------------------------------------------------------------------


def test_cli_micro_manifest_and_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["micro", "--preset", "corruption", "--trials", "2", "--seed", "5", "--backend", "scripted:exploit", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["legal_config"]["corruption_probability"] == 0.7
    assert manifest["seeds"] == [5, 6]
    assert manifest["backend_ids"]["judge"].startswith("scripted")
    assert "laws/initialized.json" in manifest["data_files"]
    assert {p.name for p in out.iterdir()} >= {"trial_00", "trial_01", "stats.json", "mean_sd.csv", "manifest.json"}
    assert "final mean welfare" in capsys.readouterr().out


def test_cli_micro_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"NUM_ACTIONS_PER_MONTH": 4}))
    out = tmp_path / "run"
    assert cli.main(["micro", "--preset", "evolving", "--config", str(cfg), "--out", str(out)]) == 0
    events = [json.loads(l) for l in (out / "trial_00" / "events.jsonl").read_text().splitlines()]
    assert sum(e["kind"] == "turn_summary" for e in events) == 16
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["NUM_ACTIONS_PER_MONTH"] == 4
    assert str(cfg) in manifest["data_files"]


def test_cli_report_reaggregates(tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["micro", "--preset", "initialized", "--trials", "2", "--backend", "scripted:exploit", "--out", str(out)])
    before = json.loads((out / "stats.json").read_text())
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["event_mean"] == before["event_mean"]


def test_cli_macro_single_level(tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["macro", "--country", "B", "--scene", "assault", "--level", "3", "--n", "50", "--backend", "scripted:coin_flip", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert [r["level"] for r in rows] == ["3"]
    n_total, n_decided, n_crime = recount(read_decisions(out / "decisions.jsonl"))
    assert n_total == 50 and float(rows[0]["crime_rate"]) == n_crime / n_decided
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["n_total"] == 50


@pytest.mark.parametrize(
    "argv",
    [
        ["macro", "--country", "Z"],
        ["macro", "--country", "A", "--scene", "arson"],
        ["macro", "--country", "A", "--backend", "scripted:nope"],
        ["macro", "--country", "A", "--n", "0"],
        ["micro", "--backend", "psychic:x"],
        ["micro", "--trials", "0"],
    ],
)
def test_cli_config_errors_exit_2(tmp_path, argv, capsys):
    assert cli.main([*argv, "--out", str(tmp_path / "x")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_usage_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["macro"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["macro", "--country", "A", "--level", "9"])
    assert cli.main(["report", str(tmp_path)]) == 2
