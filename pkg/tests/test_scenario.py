from __future__ import annotations

import json

import pytest

from legalsim.errors import MissingPunishmentText, SchemaError, UnknownEducationLabel
from legalsim.population import AgentProfile, SamplingConfig
from legalsim.scenario import (
    PromptRenderConfig,
    Scene,
    builtin_scenes,
    describe_self,
    get_scene,
    punishment_context,
    render_decision_prompt,
)

PROFILE = AgentProfile(
    agent_id=0,
    age=24,
    gender="female",
    education="tertiary_bachelor",
    religion="christianity",
    employed=True,
    income_ppp=51234.4,
    drug_use=False,
    gang_exposed=True,
    immigrant=True,
    country_id="A",
)


def test_builtin_scenes():
    scenes = builtin_scenes()
    assert [s.scene_id for s in scenes] == ["theft", "assault", "sex_trade"]
    for s in scenes:
        assert s.illegal_indices
        assert sorted(s.punishment_texts) == [0, 1, 2, 3, 4, 5]
    theft = get_scene("theft")
    assert theft.illegal_indices == (1,)
    assert theft.is_crime(1) and not theft.is_crime(0)


def test_scene_validation():
    with pytest.raises(SchemaError):
        Scene.from_dict({"scene_id": "x", "description": "d", "options": [{"text": "a", "legality": "legal"}, {"text": "b", "legality": "legal"}]})
    with pytest.raises(SchemaError):
        Scene.from_dict({"scene_id": "x", "description": "d", "options": [{"text": "a", "legality": "illegal"}]})
    with pytest.raises(SchemaError):
        Scene.from_dict({"scene_id": "x", "options": []})
    with pytest.raises(KeyError):
        get_scene("arson")


def test_scene_round_trip(tmp_path):
    theft = get_scene("theft")
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(theft.to_dict()))
    assert get_scene(str(path)) == theft


def test_describe_self_flags():
    text = describe_self(PROFILE, SamplingConfig())
    assert "24-year-old female" in text
    assert "a bachelor's degree" in text
    assert "51,234 USD" in text
    assert "Christian" in text
    assert "I have been involved in gangs." in text
    assert "immigrant" not in text
    assert "Country A" not in text

    text = describe_self(PROFILE, SamplingConfig(include_religion=False, include_immigrant=True, country_visible=True, include_society_context=True))
    assert "Christian" not in text
    assert "I am an immigrant." in text
    assert "I am from Country A." in text
    assert "developed, high-income" in text


def test_unknown_labels_raise():
    bad = AgentProfile(**{**PROFILE.to_dict(), "education": "phd"})
    with pytest.raises(UnknownEducationLabel):
        describe_self(bad, SamplingConfig())


def test_prompt_without_punishment_has_no_placeholder():
    prompt = render_decision_prompt(PROFILE, get_scene("theft"), PromptRenderConfig())
    assert "{" not in prompt
    assert "Punishment impression" not in prompt
    assert "A. Borrow money from others\nB. Steal the bag\nC. Walk away silently" in prompt
    assert "\n\n\n" not in prompt
    assert prompt.rstrip().endswith("Answer:")


def test_prompt_with_punishment_level():
    cfg = PromptRenderConfig(include_punishment_impression=True, punishment_level=4)
    prompt = render_decision_prompt("I am someone.", get_scene("theft"), cfg)
    assert "Punishment impression (for stealing): Severe punishment" in prompt
    assert prompt.index("Scene:") < prompt.index("Punishment impression") < prompt.index("A. Borrow")


def test_render_config_validation():
    with pytest.raises(ValueError):
        PromptRenderConfig(include_punishment_impression=True)
    with pytest.raises(ValueError):
        PromptRenderConfig(punishment_level=9)


def test_missing_punishment_text():
    scene = Scene("x", "d", get_scene("theft").options)
    with pytest.raises(MissingPunishmentText):
        punishment_context(scene, 2)
