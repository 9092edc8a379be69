"""Turn loop for the company-vs-laborers world."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import prompts
from .decision import complete_with_retry
from .errors import InsufficientFunds
from .game_master import (
    FactAssessment,
    adjudicate_work_status,
    apply_consequences,
    assess_action,
    extract_lawsuit,
)
from .legal import (
    adjudicate,
    apply_corruption,
    case_base_quantities,
    enforce,
    file_lawsuit,
    law_applies_to,
    laborer_party,
    legislate,
    month_summary,
    verdict_beneficiary,
)
from .presets import ExperimentPreset
from .scripted import NORMAL_WORK, MicroBackends
from .world import ActionIntent, MicroConfig, MicroWorldState, apply_payroll, init_world, parse_action_response, snapshot_welfare

COMPANY_FALLBACK = "Maintain the current hourly wage, weekly hours and safety investment for all laborers."
WELFARE_COLUMNS = ("turn", "laborer_id", "welfare", "cash", "wage", "hours", "safety")


def _ask_agent(world: MicroWorldState, backend: Any, actor: str, prompt: str, ctx: dict[str, Any], fallback: str) -> ActionIntent:
    cfg = world.config
    try:
        text, _ = complete_with_retry(
            backend,
            prompt,
            request_id=f"t{world.turn}-{actor}",
            temperature=cfg.AGENT_TEMPERATURE,
            max_tokens=cfg.AGENT_MAX_TOKENS,
            context=ctx,
        )
        think, action = parse_action_response(text)
        if not action:
            raise ValueError("empty action")
        return ActionIntent(actor, world.turn, think, action)
    except Exception as exc:
        world.emit("act", actor, "agent_error", {"error": f"{type(exc).__name__}: {exc}", "fallback": fallback})
        return ActionIntent(actor, world.turn, "", fallback)


def _tag_lawsuit(world: MicroWorldState, intent: ActionIntent) -> ActionIntent:
    targets = extract_lawsuit(
        intent.actor_id,
        intent.action,
        company_id=world.company.company_id,
        laborer_ids=list(world.laborers),
        hired_ids=world.hired_ids(),
    )
    if targets:
        intent.is_lawsuit = True
        intent.lawsuit_reason = intent.action
        intent.lawsuit_targets = tuple(targets)
    return intent


def process_lawsuits(world: MicroWorldState, backends: MicroBackends) -> None:
    cfg = world.legal_cfg
    pending, world.pending_suits = world.pending_suits, []
    for plaintiff, defendant, reason in pending:
        if not cfg.enabled:
            world.emit("legal", plaintiff, "lawsuit_ignored", {"defendant": defendant, "reason": reason, "why": "no legal system"})
            continue
        try:
            suit = file_lawsuit(world, plaintiff, defendant, reason, cfg)
        except InsufficientFunds:
            continue
        bases = case_base_quantities(world, suit)
        applicable = [law.law_id for law in world.registry if law_applies_to(law, suit, world)]
        lid = laborer_party(suit, world)
        prompt = prompts.render_judge_prompt(world, suit, prompts.case_context_text(world, suit, lid))
        verdict = adjudicate(
            suit,
            world.registry,
            {"base_quantities": bases, "applicable_laws": applicable},
            backends.judge,
            prompt=prompt,
            temperature=world.config.AGENT_TEMPERATURE,
            max_tokens=world.config.AGENT_MAX_TOKENS,
        )
        for note in verdict.anomalies:
            world.emit("legal", "judge", "anomaly", {"suit_id": suit.suit_id, "detail": note})
        beneficiary = verdict_beneficiary(verdict, suit, world.laborers)
        flip_law = world.registry.get(applicable[0]) if applicable else None
        before = verdict.verdict
        verdict = apply_corruption(
            verdict,
            beneficiary,
            cfg,
            world.rng,
            law=flip_law,
            base=bases.get(flip_law.law_id) if flip_law else None,
        )
        world.emit(
            "legal",
            "judge",
            "verdict",
            {"suit_id": suit.suit_id, "plaintiff": suit.plaintiff_id, "defendant": suit.defendant_id, "judge_verdict": before, **verdict.to_dict()},
        )
        enforce(verdict, suit, world)


def step_turn(world: MicroWorldState, backends: MicroBackends) -> tuple[MicroWorldState, list[dict[str, Any]]]:
    """Run one action turn; returns the world and the events it produced."""
    if world.clock.finished:
        raise RuntimeError("simulation already finished")
    start = len(world.events)
    cfg = world.config
    world.turn_flows = {}
    world.turn_rules = {}
    for lab in world.laborers.values():
        lab.absent_this_turn = False
    money_before = world.total_money()
    cid = world.company.company_id

    # (1) company
    company_intent = _ask_agent(world, backends.company, cid, prompts.render_company_prompt(world), {"role": "company", "world": world}, COMPANY_FALLBACK)
    _tag_lawsuit(world, company_intent)
    world.emit("act", cid, "company_action", {"action": company_intent.action, "think": company_intent.think, "lawsuit_targets": list(company_intent.lawsuit_targets)})

    # (2) laborers: requests may overlap, results are applied in id order
    hired = world.hired_ids()

    def ask(lid: str) -> ActionIntent:
        lab = world.laborers[lid]
        prompt = prompts.render_laborer_prompt(world, lab, company_intent.action)
        return _ask_agent(world, backends.laborer, lid, prompt, {"role": "laborer", "world": world, "laborer_id": lid, "company_action": company_intent.action}, NORMAL_WORK)

    workers = max(1, min(len(hired), backends.laborer.config.max_concurrency))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lab_intents = dict(zip(hired, pool.map(ask, hired)))
    else:
        lab_intents = {lid: ask(lid) for lid in hired}
    for lid in hired:
        intent = _tag_lawsuit(world, lab_intents[lid])
        world.emit("act", lid, "laborer_action", {"action": intent.action, "think": intent.think, "lawsuit_targets": list(intent.lawsuit_targets)})

    # (3) game master
    env = prompts.environment_text(world)
    assessments: dict[str, FactAssessment] = {}
    for actor, intent in [(cid, company_intent), *lab_intents.items()]:
        a = assess_action(
            actor,
            intent,
            env,
            backends.gm,
            prompt=prompts.render_gm_fact_prompt(env, actor, intent.action),
            extra_context={"world": world},
            temperature=cfg.AGENT_TEMPERATURE,
            max_tokens=cfg.AGENT_MAX_TOKENS,
        )
        assessments[actor] = a
        world.emit("gm", "game_master", "fact_assessment", {"actor": actor, **a.to_dict()})
        if a.anomaly:
            world.emit("gm", "game_master", "anomaly", {"actor": actor, "detail": a.anomaly})
    actions = {lid: lab_intents[lid].action for lid in hired}
    hiring = {lid: lab.hired for lid, lab in world.laborers.items()}
    litigation_absence = world.legal_cfg.enabled and world.legal_cfg.litigation_counts_as_absence
    ruling = adjudicate_work_status(
        company_intent.action,
        actions,
        hiring,
        backends.gm,
        prompt=prompts.render_gm_work_prompt(hiring, company_intent.action, actions),
        litigation_absence=litigation_absence,
        temperature=cfg.AGENT_TEMPERATURE,
        max_tokens=cfg.AGENT_MAX_TOKENS,
    )
    world.emit("gm", "game_master", "work_status_ruling", {**ruling.to_dict(), "rules": dict(ruling.rules)})
    for note in ruling.anomalies:
        world.emit("gm", "game_master", "anomaly", {"detail": note})
    apply_consequences(world, assessments, ruling, intents={cid: company_intent, **lab_intents}, company_action=company_intent.action)

    # (4) legal
    process_lawsuits(world, backends)

    # (5) payroll, (6) welfare
    apply_payroll(world)
    snapshot_welfare(world)
    world.company.last_action = company_intent.action
    for lid, intent in lab_intents.items():
        world.laborers[lid].last_action = intent.action

    flows = dict(sorted(world.turn_flows.items()))
    money_after = world.total_money()
    world.emit(
        "accounting",
        "world",
        "turn_summary",
        {
            "money_before": money_before,
            "money_after": money_after,
            "flows": flows,
            "capital": world.company.capital,
            "cash": {lid: lab.cash for lid, lab in world.laborers.items()},
        },
    )

    # (7) clock; legislation at month boundaries (not after the final turn)
    legislate_now = (
        world.legal_cfg.enabled
        and world.legal_cfg.legislation_enabled
        and world.turn % world.legal_cfg.legislation_interval == 0
        and world.turn < cfg.total_turns
    )
    if legislate_now:
        month = world.clock.month_index
        summary = month_summary(world, month)
        legislate(
            summary,
            world.registry,
            backends.legislator,
            world.legal_cfg,
            actions_per_month=cfg.NUM_ACTIONS_PER_MONTH,
            rng=world.rng,
            log=world.events,
            turn=world.turn,
            prompt=prompts.render_legislator_prompt(world, summary),
            temperature=cfg.AGENT_TEMPERATURE,
            max_tokens=max(2048, cfg.AGENT_MAX_TOKENS),
        )
    world.clock.advance()
    return world, world.events.events[start:]


@dataclass
class TrialResult:
    world: MicroWorldState
    out_dir: Path | None


def write_welfare_csv(rows: list[dict[str, Any]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=WELFARE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def run_trial(
    config: MicroConfig,
    preset: ExperimentPreset,
    seed: int,
    backends: MicroBackends,
    out_dir: str | Path | None = None,
) -> TrialResult:
    """Play every turn of one world and persist its logs."""
    world = init_world(config, preset, seed)
    while not world.clock.finished:
        step_turn(world, backends)
    path = None
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        world.events.write(path / "events.jsonl")
        write_welfare_csv(world.welfare_rows, path / "welfare.csv")
        (path / "laws_final.json").write_text(json.dumps(world.registry.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return TrialResult(world, path)
