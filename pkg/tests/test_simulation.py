from __future__ import annotations

import csv

import pytest

from legalsim import prompts
from legalsim.decision import ScriptedBackend
from legalsim.presets import PRESET_IDS, PRESETS, get_preset
from legalsim.errors import ConfigError
from legalsim.scripted import MicroBackends, ScriptedMicroBackend, always_guilty_judge, make_micro_backends
from legalsim.simulation import run_trial, step_turn
from legalsim.world import MicroConfig, init_world, read_events


def test_presets_are_complete():
    assert set(PRESETS) == set(PRESET_IDS)
    assert get_preset("corruption").legal_config().corruption_probability == 0.7
    assert not get_preset("pre_legal").legal_config().enabled
    with pytest.raises(ConfigError):
        get_preset("anarchy")


def test_step_turn_emits_phases_in_order():
    world = init_world(MicroConfig(), get_preset("initialized"), seed=1)
    _, events = step_turn(world, make_micro_backends("scripted:baseline"))
    kinds = [e["kind"] for e in events]
    assert kinds.index("company_action") < kinds.index("laborer_action") < kinds.index("work_status") < kinds.index("wage_paid")
    assert kinds[-1] == "turn_summary" or "law_enacted" in kinds or "legislative_analysis" in kinds
    assert all(e["turn"] == 1 for e in events)
    assert world.turn == 2


def test_finished_world_refuses_to_step():
    world = init_world(MicroConfig(SIMULATION_MONTHS=1, NUM_ACTIONS_PER_MONTH=1), get_preset("pre_legal"), seed=0)
    backends = make_micro_backends("scripted:baseline")
    step_turn(world, backends)
    with pytest.raises(RuntimeError):
        step_turn(world, backends)


def test_baseline_world_is_calm(tmp_path):
    result = run_trial(MicroConfig(), get_preset("evolving"), 3, make_micro_backends("scripted:baseline"), tmp_path)
    world = result.world
    assert not world.events.of_kind("lawsuit_filed")
    welfare = list(csv.DictReader(open(tmp_path / "welfare.csv")))
    assert len(welfare) == 3 * 9
    assert {r["turn"] for r in welfare} == {str(t) for t in range(9)}
    assert read_events(tmp_path / "events.jsonl") == world.events.events
    assert (tmp_path / "laws_final.json").exists()


def test_pre_legal_ignores_lawsuits():
    scripted = ScriptedMicroBackend("baseline")
    suer = ScriptedBackend(lambda p, c: "<think>x</think><action>Sue the company for unpaid wages.</action>")
    world = run_trial(MicroConfig(), get_preset("pre_legal"), 2, MicroBackends(scripted, suer, scripted, scripted, scripted)).world
    assert not world.events.of_kind("lawsuit_filed")
    assert not world.events.of_kind("verdict")
    assert world.events.of_kind("lawsuit_ignored")
    assert len(world.registry) == 0


def test_initialized_preset_convicts_wage_cuts():
    world = run_trial(MicroConfig(), get_preset("initialized"), 1, make_micro_backends("scripted:exploit")).world
    guilty = [e["payload"] for e in world.events.of_kind("verdict") if e["payload"]["verdict"] == "guilty"]
    assert guilty
    assert all(v["applicable_law"] for v in guilty)


def test_always_guilty_judge_cannot_invent_law():
    scripted = ScriptedMicroBackend("exploit")
    judge = ScriptedBackend(always_guilty_judge, backend_id="always_guilty")
    world = run_trial(MicroConfig(), get_preset("initialized"), 1, MicroBackends(scripted, scripted, scripted, judge, scripted)).world
    for e in world.events.of_kind("verdict"):
        assert e["payload"]["verdict"] == "not_guilty" or "LAW_INVENTED_99" not in e["payload"]["applicable_law"]


def test_agent_failure_uses_fallback():
    def broken(prompt, ctx):
        raise RuntimeError("offline")

    b = ScriptedBackend(broken, backend_id="broken")
    world = run_trial(MicroConfig(SIMULATION_MONTHS=1), get_preset("evolving"), 0, MicroBackends(b, b, b, b, b)).world
    assert world.events.of_kind("agent_error")
    # everyone keeps working on the fallback action, so nothing is lost
    assert all(e["payload"]["status"] == "WORKING" for e in world.events.of_kind("work_status"))


def test_prompts_render_without_placeholders():
    world = init_world(MicroConfig(), get_preset("initialized"), seed=0)
    lab = world.laborers["Laborer-1"]
    for text in (
        prompts.render_company_prompt(world),
        prompts.render_laborer_prompt(world, lab, "Keep terms."),
        prompts.render_legislator_prompt(world, {"month": 1, "lawsuits": []}),
        prompts.render_gm_fact_prompt(prompts.environment_text(world), "Laborer-1", "Work."),
        prompts.render_gm_work_prompt({"Laborer-1": True}, "Keep terms.", {"Laborer-1": "Work."}),
    ):
        assert text.strip()
        assert "${" not in text
    assert "LAW_WAGE_01" in prompts.render_company_prompt(world)


def test_four_actions_per_month():
    config = MicroConfig(NUM_ACTIONS_PER_MONTH=4)
    world = run_trial(config, get_preset("evolving"), 0, make_micro_backends("scripted:baseline")).world
    assert len(world.events.of_kind("turn_summary")) == 16
    pay = world.events.of_kind("wage_paid")[0]["payload"]
    assert pay["hours_worked"] == 40 and pay["living_cost"] == 375
