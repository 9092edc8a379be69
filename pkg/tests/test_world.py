from __future__ import annotations

import json

import pytest

from legalsim.errors import ConfigError
from legalsim.presets import get_preset
from legalsim.world import (
    ActionIntent,
    EventLog,
    MicroConfig,
    SimClock,
    apply_payroll,
    compute_welfare,
    init_world,
    parse_action_response,
    read_events,
)


def test_clock_walks_months_and_turns():
    clock = SimClock(months=2, actions_per_month=3)
    seen = []
    while not clock.finished:
        seen.append((clock.month_index, clock.action_turn_in_month, clock.global_turn, clock.at_month_end))
        clock.advance()
    assert [s[2] for s in seen] == [1, 2, 3, 4, 5, 6]
    assert [s[3] for s in seen] == [False, False, True, False, False, True]
    assert clock.weeks_per_turn == pytest.approx(4 / 3)


def test_config_validation_and_overrides(tmp_path):
    with pytest.raises(ConfigError):
        MicroConfig(NUM_LABORERS=0)
    with pytest.raises(ConfigError):
        MicroConfig.from_mapping({"NOT_A_KEY": 1})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"NUM_ACTIONS_PER_MONTH": 4, "GM_IMPACT_TABLE": {"High Negative": -0.5}}))
    cfg = MicroConfig.from_file(path)
    assert cfg.total_turns == 16 and cfg.weeks_per_turn == 1
    assert cfg.GM_IMPACT_TABLE == {"high negative": -0.5}


def test_welfare_clamps_and_weights():
    assert compute_welfare(-500, 500, -1, -1) == 0
    assert compute_welfare(10**6, 0, 1000, 10**4) == 100
    # only the safety term moves: 15 points over its full range
    assert compute_welfare(0, 168, 0, 600) == pytest.approx(15.0)
    assert compute_welfare(0, 168, 60, 0) == pytest.approx(85 / 3)


def test_init_world():
    world = init_world(MicroConfig(), get_preset("initialized"), seed=4)
    assert list(world.laborers) == ["Laborer-1", "Laborer-2", "Laborer-3"]
    assert world.company.capital == 100000 and world.company.num_employees == 3
    assert len(world.registry) > 0
    ev = world.events.events[0]
    assert ev["kind"] == "world_initialized" and ev["payload"]["seed"] == 4
    assert len(world.welfare_rows) == 3
    again = init_world(MicroConfig(), get_preset("initialized"), seed=4)
    assert [l.persona for l in again.laborers.values()] == [l.persona for l in world.laborers.values()]


def test_payroll_with_overtime():
    world = init_world(MicroConfig(), get_preset("pre_legal"), seed=0)
    lab = world.laborers["Laborer-1"]
    lab.weekly_hours = 48
    world.laborers["Laborer-2"].absent_this_turn = True
    world.laborers["Laborer-3"].hired = False
    before = world.total_money()
    apply_payroll(world)
    # 2 weeks per turn: 80 regular hours plus 16 overtime at 1.5x
    assert lab.cash == pytest.approx(2000 + 30 * 80 + 30 * 1.5 * 16 - 750)
    assert world.laborers["Laborer-2"].cash == pytest.approx(2000 - 750)
    assert world.laborers["Laborer-3"].cash == pytest.approx(2000 - 750)
    revenue = 60 * 96
    assert world.company.capital == pytest.approx(100000 + revenue - (2400 + 720) - 250)
    assert world.total_money() - before == pytest.approx(sum(world.turn_flows.values()))
    entries = {e.laborer_id: e for e in world.contract_log}
    assert entries["Laborer-1"].overtime_hours_worked == 16
    assert entries["Laborer-2"].absent and entries["Laborer-3"].absent


def test_bankruptcy_is_flagged_once():
    world = init_world(MicroConfig(LABORER_INITIAL_CASH=100), get_preset("pre_legal"), seed=0)
    for lab in world.laborers.values():
        lab.absent_this_turn = True
    apply_payroll(world)
    apply_payroll(world)
    assert all(l.bankrupt for l in world.laborers.values())
    assert len(world.events.of_kind("bankruptcy")) == 3


def test_parse_action_response():
    think, action = parse_action_response("<response><think>hmm</think><action>Work  my\nshift.</action></response>")
    assert (think, action) == ("hmm", "Work my shift.")
    assert parse_action_response("I will think.\nStrike today.") == ("", "Strike today.")
    assert parse_action_response("<think>x</think><action>Sue the company")[1] == "Sue the company"
    with pytest.raises(ValueError):
        ActionIntent("a", 1, "", "   ")


def test_event_log_round_trip(tmp_path):
    log = EventLog()
    log.emit(1, "act", "x", "note", {"a": 1})
    log.emit(1, "act", "y", "other")
    log.write(tmp_path / "events.jsonl")
    assert read_events(tmp_path / "events.jsonl") == log.events
    assert len(log.of_kind("note")) == 1 and len(log) == 2
