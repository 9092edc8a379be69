"""Macro experiment: population x scene x punishment level -> crime rates."""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .decision import (
    Backend,
    DecisionRecord,
    DecisionRequest,
    decide_batch,
    parse_choice,
)
from .errors import LegalSimError
from .population import AgentProfile, CountryStats, SamplingConfig, generate_population
from .scenario import DEFAULT_PROMPT_TEMPLATE, PromptRenderConfig, Scene, describe_self, render_decision_prompt

log = logging.getLogger(__name__)

SUBGROUP_ATTRIBUTES = ("gender", "education", "employed", "drug_use", "gang_exposed", "religion", "immigrant")
BASELINE = "none"


@dataclass(frozen=True)
class MacroRunSpec:
    country_id: str
    scene_id: str
    punishment_level: int | None = None
    population_size: int = 10_000
    seed: int = 0
    include_religion: bool = True
    include_immigrant: bool = False
    country_visible: bool = False
    include_society_context: bool = False
    backend: str = "scripted:always_legal"
    output_dir: str | None = None
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    temperature: float = 1.0
    max_output_tokens: int = 16

    def __post_init__(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")

    def sampling_config(self) -> SamplingConfig:
        return SamplingConfig(
            seed=self.seed,
            include_religion=self.include_religion,
            include_immigrant=self.include_immigrant,
            country_visible=self.country_visible,
            include_society_context=self.include_society_context,
            population_size=self.population_size,
        )


@dataclass
class CrimeRateReport:
    scene_id: str
    punishment_level: int | None
    n_total: int
    n_decided: int
    n_crime: int
    unparsed_count: int
    subgroup_rates: dict[str, dict[str, dict[str, float | int]]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def crime_rate(self) -> float:
        return self.n_crime / self.n_decided if self.n_decided else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "punishment_level": self.punishment_level,
            "n_total": self.n_total,
            "n_decided": self.n_decided,
            "n_crime": self.n_crime,
            "crime_rate": self.crime_rate,
            "unparsed_count": self.unparsed_count,
            "subgroup_rates": self.subgroup_rates,
            "metadata": self.metadata,
        }


def _group_key(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def subgroup_rates(
    records: Iterable[DecisionRecord],
    population: Sequence[AgentProfile],
    attribute: str,
) -> dict[str, dict[str, float | int]]:
    """Crime rate per value of one profile attribute, over decided records."""
    if attribute not in SUBGROUP_ATTRIBUTES:
        raise ValueError(f"cannot break down by {attribute!r}; choose from {SUBGROUP_ATTRIBUTES}")
    by_id = {p.agent_id: p for p in population}
    counts: dict[str, list[int]] = {}
    for rec in records:
        if rec.chosen_option is None:
            continue
        key = _group_key(getattr(by_id[rec.agent_id], attribute))
        n_crime = counts.setdefault(key, [0, 0])
        n_crime[0] += 1
        n_crime[1] += int(rec.is_crime)
    return {
        k: {"n": n, "n_crime": c, "rate": c / n}
        for k, (n, c) in sorted(counts.items())
        if n > 0
    }


def build_report(
    records: Sequence[DecisionRecord],
    population: Sequence[AgentProfile],
    scene_id: str,
    level: int | None,
) -> CrimeRateReport:
    decided = [r for r in records if r.chosen_option is not None]
    report = CrimeRateReport(
        scene_id=scene_id,
        punishment_level=level,
        n_total=len(records),
        n_decided=len(decided),
        n_crime=sum(1 for r in decided if r.is_crime),
        unparsed_count=len(records) - len(decided),
    )
    report.subgroup_rates = {a: subgroup_rates(decided, population, a) for a in SUBGROUP_ATTRIBUTES}
    return report


def reference_metadata(country_id: str, scene_id: str) -> dict[str, Any]:
    refs = json.loads((resources.files("legalsim.data") / "reference_rates.json").read_text("utf-8"))
    return {
        "rate_definition": "fraction of parsed decisions that chose an illegal option (per decision, not per capita per year)",
        "real_world_reference": refs.get(scene_id, {}).get(country_id),
        "published_simulated_reference": {
            model: rates.get(scene_id, {}).get(country_id) for model, rates in refs.get("_published_simulated", {}).items()
        },
        "reference_note": refs.get("_note"),
    }


def decide_population(
    population: Sequence[AgentProfile],
    scene: Scene,
    level: int | None,
    backend: Backend,
    sampling_cfg: SamplingConfig,
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE,
    temperature: float = 1.0,
    max_output_tokens: int = 16,
    country: CountryStats | None = None,
) -> list[DecisionRecord]:
    render_cfg = PromptRenderConfig(
        include_punishment_impression=level is not None,
        punishment_level=level,
        prompt_template=prompt_template,
    )
    tag = BASELINE if level is None else str(level)
    requests = []
    for p in population:
        prompt = render_decision_prompt(describe_self(p, sampling_cfg, country), scene, render_cfg)
        requests.append(
            DecisionRequest(
                request_id=f"{scene.scene_id}-L{tag}-{p.agent_id}",
                prompt=prompt,
                num_options=len(scene.options),
                temperature=temperature,
                max_output_tokens=max_output_tokens,
                context={"profile": p, "scene": scene, "level": level},
            )
        )
    responses = decide_batch(requests, backend)

    records = []
    for p, req, resp in zip(population, requests, responses):
        assert resp.request_id == req.request_id
        chosen: int | None = None
        error = resp.error
        if resp.ok:
            try:
                chosen = parse_choice(resp.text or "", req.num_options)
            except (LegalSimError, ValueError) as exc:
                error = f"{type(exc).__name__}: {exc}"
        records.append(
            DecisionRecord(
                request_id=req.request_id,
                agent_id=p.agent_id,
                scene_id=scene.scene_id,
                chosen_option=chosen,
                raw_text=resp.text,
                backend_id=backend.backend_id,
                is_crime=chosen is not None and scene.is_crime(chosen),
                punishment_level=level,
                error=error,
            )
        )
    return records


def recount(records: Iterable[DecisionRecord | dict]) -> tuple[int, int, int]:
    """(n_total, n_decided, n_crime) straight from the log."""
    n_total = n_decided = n_crime = 0
    for r in records:
        d = r if isinstance(r, dict) else r.to_dict()
        n_total += 1
        if d["chosen_option"] is not None:
            n_decided += 1
            n_crime += bool(d["is_crime"])
    return n_total, n_decided, n_crime


def write_decisions(records: Iterable[DecisionRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False))
            fh.write("\n")


def read_decisions(path: str | Path) -> list[DecisionRecord]:
    with open(path, encoding="utf-8") as fh:
        return [DecisionRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def run_macro(
    spec: MacroRunSpec,
    country: CountryStats,
    scene: Scene,
    backend: Backend,
    population: Sequence[AgentProfile] | None = None,
    verify: bool = True,
) -> tuple[CrimeRateReport, list[DecisionRecord]]:
    """Run one (scene, level) cell.

    With ``output_dir`` set, writes ``decisions.jsonl`` and ``report.json``.
    ``verify`` re-reads the aggregation against a plain recount of the log.
    """
    cfg = spec.sampling_config()
    if population is None:
        population = generate_population(country, cfg, random.Random(spec.seed))
    records = decide_population(
        population,
        scene,
        spec.punishment_level,
        backend,
        cfg,
        spec.prompt_template,
        spec.temperature,
        spec.max_output_tokens,
        country,
    )
    report = build_report(records, population, scene.scene_id, spec.punishment_level)
    report.metadata = {
        "country_id": country.country_id,
        "seed": spec.seed,
        "backend_id": backend.backend_id,
        **reference_metadata(country.country_id, scene.scene_id),
    }
    if verify and recount(records) != (report.n_total, report.n_decided, report.n_crime):
        raise AssertionError("crime-rate aggregation disagrees with decision log recount")

    if spec.output_dir:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_decisions(records, out / "decisions.jsonl")
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return report, records


def level_label(level: int | None) -> str:
    return BASELINE if level is None else str(level)


def punishment_sweep(
    base: MacroRunSpec,
    country: CountryStats,
    scene: Scene,
    backend: Backend,
    levels: Sequence[int | None] = (None, 0, 1, 2, 3, 4, 5),
) -> list[CrimeRateReport]:
    """One report per level over a single shared population.

    Each level gets its own subdirectory under ``base.output_dir``; the
    level-to-rate table goes to ``sweep.csv`` at the top.
    """
    cfg = base.sampling_config()
    population = generate_population(country, cfg, random.Random(base.seed))
    reports = []
    all_records: list[DecisionRecord] = []
    for level in levels:
        sub_dir = None
        if base.output_dir:
            sub_dir = str(Path(base.output_dir) / f"level_{level_label(level)}")
        spec = replace(base, punishment_level=level, output_dir=sub_dir)
        report, records = run_macro(spec, country, scene, backend, population=population)
        reports.append(report)
        all_records.extend(records)

    if base.output_dir:
        out = Path(base.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(reports, out / "sweep.csv")
        write_decisions(all_records, out / "decisions.jsonl")
        summary = {"scene_id": scene.scene_id, "levels": [r.to_dict() for r in reports]}
        (out / "report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return reports


def write_sweep_csv(reports: Sequence[CrimeRateReport], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "crime_rate", "n"])
        for r in reports:
            w.writerow([level_label(r.punishment_level), repr(r.crime_rate), r.n_decided])
