from __future__ import annotations

import csv
import json

import pytest

from legalsim.decision import ScriptedBackend, make_macro_backend
from legalsim.macro import (
    SUBGROUP_ATTRIBUTES,
    MacroRunSpec,
    punishment_sweep,
    read_decisions,
    recount,
    run_macro,
    subgroup_rates,
)
from legalsim.population import generate_population, load_country
from legalsim.scenario import get_scene


def _spec(tmp_path=None, **over):
    base = dict(country_id="A", scene_id="theft", population_size=120, seed=2, output_dir=str(tmp_path) if tmp_path else None)
    base.update(over)
    return MacroRunSpec(**base)


def test_always_policies():
    country, theft = load_country("A"), get_scene("theft")
    legal, _ = run_macro(_spec(), country, theft, make_macro_backend("scripted:always_legal"))
    illegal, _ = run_macro(_spec(), country, theft, make_macro_backend("scripted:always_illegal"))
    assert legal.crime_rate == 0.0 and legal.n_decided == 120
    assert illegal.crime_rate == 1.0 and illegal.n_crime == 120


def test_unparsed_responses_excluded():
    # every third agent answers gibberish
    backend = ScriptedBackend(lambda p, ctx: "???" if ctx["profile"].agent_id % 3 == 0 else "B")
    report, records = run_macro(_spec(), load_country("A"), get_scene("theft"), backend)
    assert report.n_total == 120
    assert report.unparsed_count == 40
    assert report.n_decided == 80 and report.crime_rate == 1.0
    bad = [r for r in records if r.chosen_option is None]
    assert all("UnparseableResponse" in r.error for r in bad)


def test_output_files(tmp_path):
    report, records = run_macro(_spec(tmp_path), load_country("A"), get_scene("theft"), make_macro_backend("scripted:coin_flip"))
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["crime_rate"] == report.crime_rate
    assert set(doc["subgroup_rates"]) == set(SUBGROUP_ATTRIBUTES)
    assert doc["metadata"]["real_world_reference"] is not None
    assert read_decisions(tmp_path / "decisions.jsonl") == records
    assert recount(records) == (report.n_total, report.n_decided, report.n_crime)


def test_subgroup_rates_gang_policy():
    country = load_country("A")
    spec = _spec(population_size=3000)
    pop = generate_population(country, spec.sampling_config())
    _, records = run_macro(spec, country, get_scene("theft"), make_macro_backend("scripted:gang_illegal"), population=pop)
    rates = subgroup_rates(records, pop, "gang_exposed")
    assert rates["false"]["rate"] == 0.0
    if "true" in rates:
        assert rates["true"]["rate"] == 1.0
    with pytest.raises(ValueError):
        subgroup_rates(records, pop, "age")


def test_sweep_layout(tmp_path):
    reports = punishment_sweep(_spec(tmp_path), load_country("A"), get_scene("theft"), make_macro_backend("scripted:deterrence"))
    assert [r.punishment_level for r in reports] == [None, 0, 1, 2, 3, 4, 5]
    for label in ("none", "0", "5"):
        assert (tmp_path / f"level_{label}" / "decisions.jsonl").exists()
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["crime_rate"]) for r in rows] == [r.crime_rate for r in reports]
    assert len(read_decisions(tmp_path / "decisions.jsonl")) == 7 * 120
    summary = json.loads((tmp_path / "report.json").read_text())
    assert len(summary["levels"]) == 7


def test_reference_metadata_echo():
    report, _ = run_macro(_spec(population_size=5), load_country("A"), get_scene("theft"), make_macro_backend("scripted:always_legal"))
    meta = report.metadata
    assert meta["published_simulated_reference"]["qwen2.5-72b-instruct"] == 0.0116
    assert "per decision" in meta["rate_definition"]


def test_spec_validation():
    with pytest.raises(ValueError):
        MacroRunSpec("A", "theft", population_size=0)
