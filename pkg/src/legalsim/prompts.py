"""Render the company, laborer, judge, legislator and game-master prompts."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Any, Mapping, Sequence

from .presets import steering_texts
from .world import LaborerState, MicroWorldState


@lru_cache(maxsize=None)
def template(name: str) -> Template:
    return Template((resources.files("legalsim.data.texts") / f"{name}.txt").read_text("utf-8").rstrip("\n"))


def fill(name: str, **values: Any) -> str:
    return template(name).substitute({k: str(v) for k, v in values.items()})


def money(x: float) -> str:
    return f"${x:,.2f}"


def shared_background(world: MicroWorldState) -> str:
    name = "shared_background_legal" if world.legal_cfg.enabled else "shared_background"
    return fill(name, company_name=world.company.company_id)


def average_arrangement(world: MicroWorldState) -> str:
    cfg = world.config
    return fill(
        "average_arrangement",
        wage=money(cfg.INITIAL_HOURLY_WAGE),
        safety=money(cfg.SAFETY_INVESTIMENT_INPUT),
        hours=f"{cfg.NORMAL_WORK_HOURS_PER_WEEK:.2f}",
    )


def laws_json(world: MicroWorldState) -> str:
    return json.dumps(world.registry.public_view(), indent=2, ensure_ascii=False)


def law_related_info(world: MicroWorldState, agent_id: str) -> str:
    """Current laws plus suits and verdicts that involved ``agent_id``."""
    if not world.legal_cfg.enabled:
        return ""
    lines = ["**Current Laws**:"]
    lines.append(laws_json(world) if len(world.registry) else "No laws have been enacted yet.")
    recent = [s for s in world.suits if agent_id in (s.plaintiff_id, s.defendant_id)][-4:]
    if recent:
        lines.append("**Your recent court cases**:")
        for s in recent:
            v = world.verdicts.get(s.suit_id)
            outcome = "pending" if v is None else f"{v.verdict}, penalty {money(v.penalty)}, compensation {money(v.compensation)}"
            lines.append(f"- turn {s.filed_turn}: {s.plaintiff_id} v. {s.defendant_id} ({s.reason!r}) -> {outcome}")
    return "\n".join(lines)


def laborer_summary(world: MicroWorldState) -> str:
    parts = [f"{lid}: {lab.last_action}" for lid, lab in world.laborers.items()]
    return " | ".join(parts)


def render_laborer_prompt(world: MicroWorldState, lab: LaborerState, company_action: str) -> str:
    steer = steering_texts()
    cfg = world.legal_cfg
    litigation = ""
    if cfg.enabled and cfg.litigation_fee > 0:
        litigation = Template(steer["litigation_cost"]).substitute(fee=money(cfg.litigation_fee))
    show_terms = world.config.KNOW_ARRANGEMENT
    return fill(
        "laborer_prompt",
        background=shared_background(world),
        self_description=lab.persona.describe(world.company.company_id),
        perception=lab_perception(world, lab),
        hired_status="Hired" if lab.hired else "Terminated by company",
        cash=money(lab.cash),
        living_cost=money(lab.living_cost),
        welfare=f"{world.welfare_of(lab):.2f}",
        company_id=world.company.company_id,
        wage=money(lab.hourly_wage) if show_terms else "not disclosed",
        safety=money(world.company.safety_investment) if show_terms else "not disclosed",
        hours=f"{lab.weekly_hours:.2f}" if show_terms else "not disclosed",
        overtime=lab.overtime_arrangement,
        law_info=law_related_info(world, lab.laborer_id),
        laborer_summary=laborer_summary(world),
        my_last_action=lab.last_action,
        company_action=company_action,
        lawsuit_call=steer["lawsuit_call"][cfg.bias] if cfg.enabled else "",
        litigation_cost=litigation,
        output_format=fill("action_format"),
    )


def lab_perception(world: MicroWorldState, lab: LaborerState) -> str:
    return world.perception_text if world.legal_cfg.enabled else ""


def current_arrangement(world: MicroWorldState) -> str:
    lines = ["* **Current working arrangement:**"]
    for lid, lab in world.laborers.items():
        lines.append(
            f"    * {lid}: wage {money(lab.hourly_wage)}/h, {lab.weekly_hours:.2f} h/week, "
            f"overtime x{lab.overtime_multiplier:g}, {'hired' if lab.hired else 'not employed'}"
        )
    lines.append(f"    * Safety investment: {money(world.company.safety_investment)} per month")
    return "\n".join(lines)


def render_company_prompt(world: MicroWorldState) -> str:
    steer = steering_texts()
    cfg = world.legal_cfg
    status = "\n".join(
        f"- {lid} ({'hired' if lab.hired else 'not employed'}, cash {money(lab.cash)}): {lab.last_action}"
        for lid, lab in world.laborers.items()
    )
    corruption = steer["corruption_company"] if cfg.enabled and cfg.corruption_probability >= 0.5 else ""
    return fill(
        "company_prompt",
        background=shared_background(world),
        average_arrangement=average_arrangement(world),
        company_id=world.company.company_id,
        capital=money(world.company.capital),
        base_profit=money(world.company.base_profit),
        num_employees=world.company.num_employees,
        arrangement=current_arrangement(world),
        law_info=law_related_info(world, world.company.company_id),
        laborer_summary=laborer_summary(world),
        company_action=world.company.last_action,
        bias=steer["company_bias"][cfg.bias] if cfg.enabled else "",
        corruption=corruption,
        laborer_ids=", ".join(world.laborers),
        laborer_status=status,
        output_format=fill("action_format"),
    )


def case_context_text(world: MicroWorldState, suit: Any, laborer_id: str | None) -> str:
    lines = []
    actions = [
        e for e in world.events.events
        if e["actor"] == suit.defendant_id and e["kind"] in ("company_action", "laborer_action")
    ][-4:]
    lines.append(f"Recent actions of the defendant {suit.defendant_id}:")
    lines += [f"- turn {e['turn']}: {e['payload']['action']}" for e in actions] or ["- none recorded"]
    if laborer_id is not None:
        lab = world.laborers[laborer_id]
        lines.append(
            f"Contract of {laborer_id}: hourly wage {money(lab.hourly_wage)}, {lab.weekly_hours:.2f} hours/week "
            f"(standard week {world.config.NORMAL_WORK_HOURS_PER_WEEK:g} h), overtime: {lab.overtime_arrangement}"
        )
        lines.append(f"Company safety investment: {money(world.company.safety_investment)} per month")
        history = [c for c in world.contract_log if c.laborer_id == laborer_id]
        if history:
            lines.append("Payroll record (per action turn):")
            for c in history:
                lines.append(
                    f"- turn {c.turn}: wage {c.hourly_wage:.2f}, {c.weekly_hours:g} h/week, overtime x{c.overtime_multiplier:g}, "
                    f"safety {c.safety_investment:.2f}/month, hours worked {c.hours_worked:g} (overtime {c.overtime_hours_worked:g})"
                    + (", absent" if c.absent else "")
                )
    lines.append(f"Company profit last action turn: {money(world.last_turn_profit)}")
    lines.append(f"Each month has {world.config.NUM_ACTIONS_PER_MONTH} action turns of {world.config.weeks_per_turn:g} weeks each.")
    return "\n".join(lines)


def render_judge_prompt(world: MicroWorldState, suit: Any, context_text: str) -> str:
    steer = steering_texts()
    corrupt = world.legal_cfg.corruption_probability > 0
    case = fill(
        "judge_case",
        plaintiff=suit.plaintiff_id,
        defendant=suit.defendant_id,
        reason=suit.reason,
        laws=laws_json(world),
        context=context_text,
        average_arrangement=average_arrangement(world),
    )
    return fill(
        "judge_prompt",
        corruption_secret=steer["corruption_secret"] if corrupt else "",
        corruption_reminder=steer["corruption_reminder"] if corrupt else "",
        bias=steer["judge_bias"][world.legal_cfg.bias],
        steps=fill("judge_steps"),
        case=case,
        output_format=fill("judge_output"),
    ).lstrip("\n")


def render_legislator_prompt(world: MicroWorldState, summary: Mapping[str, Any]) -> str:
    steer = steering_texts()
    n = world.config.NUM_ACTIONS_PER_MONTH
    return fill(
        "legislator_prompt",
        mandate=steer["legislator_mandate"][world.legal_cfg.bias],
        deterrence=steer["deterrence_principle"],
        weeks_rounded=round(4 / n),
        actions_per_month=n,
        weeks_per_turn=round(4 / n, 2),
        laws=laws_json(world),
        summary=json.dumps(summary, indent=2, ensure_ascii=False),
        background=shared_background(world) + "\n" + average_arrangement(world),
        steps=fill("legislator_steps"),
        output_format=fill("legislator_output"),
    )


def environment_text(world: MicroWorldState) -> str:
    lines = [shared_background(world), current_arrangement(world)]
    lines.append(f"Company capital: {money(world.company.capital)}")
    if world.legal_cfg.enabled:
        lines.append("Current laws: " + (json.dumps(world.registry.public_view(), ensure_ascii=False) if len(world.registry) else "none"))
    return "\n".join(lines)


def render_gm_fact_prompt(environment: str, actor_id: str, action: str) -> str:
    return fill("gm_fact_prompt", environment=environment, actor_id=actor_id, action=action)


def render_gm_work_prompt(hiring: Mapping[str, bool], company_action: str, actions: Mapping[str, str]) -> str:
    hiring_text = ", ".join(f"{k}: {'hired' if v else 'not employed'}" for k, v in hiring.items())
    actions_text = "\n".join(f"- {k}: {v}" for k, v in actions.items())
    return fill(
        "gm_work_prompt",
        rules=fill("gm_work_rules"),
        hiring=hiring_text,
        company_action=company_action,
        actions=actions_text,
        output_format=fill("gm_work_output"),
    )


def data_file_names() -> Sequence[str]:
    """Text assets that shape prompts (hashed into run manifests)."""
    root = resources.files("legalsim.data.texts")
    return sorted(p.name for p in root.iterdir() if p.name.endswith((".txt", ".json")))
