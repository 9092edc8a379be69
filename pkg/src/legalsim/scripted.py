"""Deterministic stand-ins for every role in the company-vs-laborers world.

Each scripted backend reads the structured ``context`` the simulation
passes alongside the prompt, so runs need no network and replay exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .decision import Backend, BackendConfig, RemoteChatBackend, load_remote_config
from .errors import ConfigError
from .game_master import NOT_WORKING, classify_intent, is_litigation
from .legal import price_violation

SCRIPTS = ("baseline", "exploit")
NORMAL_WORK = "Continue normal work at my post."


class ScriptedMicroBackend:
    """Answers by ``context['role']``: company, laborer, gm_fact, gm_work, judge, legislator."""

    def __init__(self, script: str = "baseline"):
        if script not in SCRIPTS:
            raise ConfigError(f"unknown micro script {script!r}; choose from {SCRIPTS}")
        self.script = script
        self.backend_id = f"scripted:{script}"
        self.config = BackendConfig(kind="scripted", max_concurrency=1, retry_limit=0)
        self._roles: dict[str, Callable[[Mapping[str, Any]], str]] = {
            "company": self._company,
            "laborer": self._laborer,
            "gm_fact": gm_fact_response,
            "gm_work": gm_work_response,
            "judge": judge_response,
            "legislator": self._legislator,
        }

    def complete(self, prompt: str, *, temperature: float = 1.0, max_tokens: int = 1024, context: Mapping[str, Any] | None = None) -> str:
        context = context or {}
        role = context.get("role")
        if role not in self._roles:
            raise ConfigError(f"scripted micro backend got unknown role {role!r}")
        return self._roles[role](context)

    def _company(self, ctx: Mapping[str, Any]) -> str:
        action = company_baseline(ctx["world"]) if self.script == "baseline" else company_exploit(ctx["world"])
        return wrap_action("Scripted company policy.", action)

    def _laborer(self, ctx: Mapping[str, Any]) -> str:
        world, lid = ctx["world"], ctx["laborer_id"]
        action = NORMAL_WORK if self.script == "baseline" else laborer_exploit(world, lid)
        return wrap_action("Scripted laborer policy.", action)

    def _legislator(self, ctx: Mapping[str, Any]) -> str:
        if self.script == "baseline":
            return json.dumps({"analysis_summary": {"most_frequent_violations": [], "identified_problems": []}, "changes": []})
        return legislator_response(ctx)


def wrap_action(think: str, action: str) -> str:
    return f"<response>\n<think>\n{think}\n</think>\n<action>\n{action}\n</action>\n</response>"


# --- company / laborer scripts ------------------------------------------------


def company_baseline(world: Any) -> str:
    return "Maintain the current hourly wage, weekly hours and safety investment for all laborers."


def _strikers_last_turn(world: Any) -> list[str]:
    prev = world.turn - 1
    return [
        e["actor"]
        for e in world.events.events
        if e["turn"] == prev and e["kind"] == "work_status" and e["payload"]["rule"] in ("rule1", "rule2", "contradiction")
    ]


def _company_lost_case(world: Any) -> bool:
    cid = world.company.company_id
    return any(s.defendant_id == cid and world.verdicts.get(s.suit_id) is not None and world.verdicts[s.suit_id].guilty for s in world.suits)


def company_exploit(world: Any) -> str:
    """Probe laborers with small cuts, back off after losing in court."""
    t = world.turn
    cfg = world.config
    lab0 = next(iter(world.laborers.values()))
    below_par = lab0.hourly_wage < cfg.INITIAL_HOURLY_WAGE or world.company.safety_investment < cfg.SAFETY_INVESTIMENT_INPUT
    if below_par and _company_lost_case(world):
        return (
            f"Restore the hourly wage to {cfg.INITIAL_HOURLY_WAGE:g} and the safety investment to "
            f"{cfg.SAFETY_INVESTIMENT_INPUT:g} for all laborers."
        )
    strikers = _strikers_last_turn(world)
    if strikers and world.legal_cfg.enabled:
        return f"Sue {', '.join(strikers)} for the work stoppage that halted production last round."
    schedule = {
        2: "Cut the hourly wage to 29.5 for all laborers.",
        3: "Reduce the safety investment to 400 per month.",
        4: "Raise the weekly work hours to 48 with overtime paid at 1.2x for all laborers.",
        6: "Cut the hourly wage to 28 for all laborers.",
    }
    return schedule.get(t, company_baseline(world))


def grievances(world: Any, lab: Any) -> list[str]:
    cfg = world.config
    out = []
    if lab.hourly_wage < cfg.INITIAL_HOURLY_WAGE:
        out.append("paying an hourly wage below the town average")
    if world.company.safety_investment < cfg.SAFETY_INVESTIMENT_INPUT:
        out.append("cutting the safety investment")
    if lab.weekly_hours > cfg.NORMAL_WORK_HOURS_PER_WEEK and lab.overtime_multiplier < 1.5:
        out.append("underpaying overtime")
    return out


def laborer_exploit(world: Any, lid: str) -> str:
    lab = world.laborers[lid]
    if not lab.hired:
        return "Look for odd jobs in town."
    issues = grievances(world, lab)
    if not issues:
        return NORMAL_WORK
    issue = issues[0]
    style = lab.persona.behavioral_tendency
    legal = world.legal_cfg
    trusts_courts = legal.enabled and lab.perception_of_law != "negative"
    can_afford = lab.cash >= legal.litigation_fee + lab.living_cost / world.config.NUM_ACTIONS_PER_MONTH
    if legal.litigation_fee and style == "passive":
        can_afford = False
    if trusts_courts and can_afford and style != "aggressive":
        return f"Sue the company for {issue}."
    if style in ("aggressive", "opportunistic"):
        return f"Join a strike at the factory gates against the company {issue}."
    if style == "conciliatory":
        return f"Negotiate with management about the company {issue} while continuing normal work."
    return NORMAL_WORK


# --- game master ---------------------------------------------------------


def gm_fact_response(ctx: Mapping[str, Any]) -> str:
    action = ctx["action"]
    match = classify_intent(action)
    if match.rule in ("rule1", "contradiction"):
        econ = {"company": "Significant Loss", "laborers": "Moderate Loss"}
        welfare, risk = "Severe Blow", ("Medium Risk", "work stoppage may breach laws on conduct")
        narrative = "Production stops while the laborer is off the line."
    elif match.rule == "rule2":
        econ = {"company": "Significant Loss", "laborers": "Minor Loss"}
        welfare, risk = "Slight Decline", ("High Risk", "damage or departure")
        narrative = "The laborer leaves production."
    elif is_litigation(action):
        econ = {"company": "Minor Loss", "laborers": "No Impact"}
        welfare, risk = "No Impact", ("No Risk", "")
        narrative = "A lawsuit is brought."
    elif any(w in action.lower() for w in ("cut", "reduce", "lower")):
        econ = {"company": "Minor Profit", "laborers": "Minor Loss"}
        welfare, risk = "Slight Decline", ("Medium Risk", "terms may fall below legal minimums")
        narrative = "Working terms become worse for laborers."
    else:
        econ = {"company": "No Impact", "laborers": "No Impact"}
        welfare, risk = "No Impact", ("No Risk", "")
        narrative = "Work continues as usual."
    return json.dumps(
        {
            "narrative": narrative,
            "economic_impact": econ,
            "welfare_impact": welfare,
            "legal_risk": {"level": risk[0], "reason": risk[1]},
        }
    )


def gm_work_response(ctx: Mapping[str, Any]) -> str:
    reasoning, not_working = [], []
    for lid, action in ctx["intents"].items():
        if not ctx["hiring"].get(lid, True):
            continue
        m = classify_intent(action, litigation_absence=ctx.get("litigation_absence", False))
        reasoning.append({"laborer_id": lid, "action": action, "analysis": m.reason, "status": m.status})
        if m.status == NOT_WORKING:
            not_working.append(lid)
    return json.dumps({"reasoning": reasoning, "not_working": not_working})


# --- judge -------------------------------------------------------------------


def judge_response(ctx: Mapping[str, Any]) -> str:
    """Guilty on every applicable structured law the record shows broken."""
    registry = ctx["registry"]
    bases = ctx.get("base_quantities", {})
    cited, steps = [], []
    penalty = comp = 0.0
    for law_id in ctx.get("applicable_laws", []):
        law = registry.get(law_id)
        if law is None or not law.structured or law_id not in bases:
            continue
        base = bases[law_id]
        if base["violation_turns"] <= 0:
            continue
        p, c, s = price_violation(law, base)
        cited.append(law_id)
        steps.append(f"{law_id}: {s}")
        penalty += p
        comp += c
    if cited:
        return json.dumps(
            {
                "reasoning_steps": f"The record shows breaches of {', '.join(cited)}.",
                "verdict": "guilty",
                "justification": "Explicit breach of the cited law(s).",
                "applicable_law": ", ".join(cited),
                "calculation_steps": "; ".join(steps),
                "penalty": penalty,
                "compensation": comp,
            }
        )
    return json.dumps(
        {
            "reasoning_steps": "No applicable law is shown to be breached.",
            "verdict": "not_guilty",
            "justification": "No law covers the conduct complained of.",
            "applicable_law": None,
            "calculation_steps": "",
            "penalty": 0,
            "compensation": 0,
        }
    )


def always_guilty_judge(prompt: str, ctx: Mapping[str, Any]) -> str:
    """Adversarial judge: convicts under an invented statute every time."""
    return json.dumps(
        {
            "reasoning_steps": "Convict.",
            "verdict": "guilty",
            "justification": "Guilty regardless.",
            "applicable_law": "LAW_INVENTED_99",
            "calculation_steps": "",
            "penalty": 1000,
            "compensation": 500,
        }
    )


# --- legislator ----------------------------------------------------------

_GAP_LAWS = {
    "wage": (
        "LAW_WAGE_01",
        {
            "description": "The company may not pay an hourly wage below 30.",
            "penalty": "200% of the wage shortfall",
            "compensation": "100% of the wage shortfall",
            "period": "per_violation",
            "condition": {"quantity": "hourly_wage", "minimum": 30},
        },
    ),
    "safety": (
        "LAW_SAFE_01",
        {
            "description": "Monthly safety investment may not fall below 500.",
            "penalty": "100% of the shortfall",
            "compensation": "N/A",
            "period": "per_action_turn",
            "condition": {"quantity": "safety_investment", "minimum": 500},
        },
    ),
    "overtime": (
        "LAW_WORK_01",
        {
            "description": "Hours beyond 40 per week must be paid at least 1.5 times the hourly wage.",
            "penalty": "100% of the unpaid overtime shortfall",
            "compensation": "100% of the unpaid overtime shortfall",
            "period": "per_violation",
            "condition": {"quantity": "overtime_multiplier", "minimum": 1.5, "applies_above_hours": 40},
        },
    ),
    "stoppage": (
        "LAW_STRIKE_01",
        {
            "description": "Laborers who stop work without notice pay a fine for each turn of stoppage.",
            "penalty": "100 per week",
            "compensation": "N/A",
            "period": "per_action_turn",
            "condition": {"quantity": "strike_turns", "minimum": 0},
        },
    ),
}
_TOPIC_WORDS = {
    "wage": ("wage",),
    "safety": ("safety",),
    "overtime": ("overtime",),
    "stoppage": ("stoppage", "strike", "halted", "sabotage"),
}


def legislator_response(ctx: Mapping[str, Any]) -> str:
    """Fill gaps exposed by acquittals; double penalties that fail to deter."""
    summary, registry = ctx["summary"], ctx["registry"]
    bias = ctx.get("bias", "none")
    covered = {law.condition.quantity for law in registry if law.condition is not None}
    quantity_of = {"wage": "hourly_wage", "safety": "safety_investment", "overtime": "overtime_multiplier", "stoppage": "strike_turns"}
    changes, problems = [], []
    for suit in summary.get("lawsuits", []):
        if suit["verdict"] != "not_guilty":
            continue
        reason = suit["reason"].lower()
        for topic, words in _TOPIC_WORDS.items():
            if not any(w in reason for w in words) or quantity_of[topic] in covered:
                continue
            if topic == "stoppage" and bias == "pro_laborer":
                continue
            law_id, content = _GAP_LAWS[topic]
            if law_id in registry:
                continue
            covered.add(quantity_of[topic])
            problems.append({"problem_type": "Legal Gap", "details": f"no law covers {topic}"})
            changes.append({"action": "CREATE", "law_code": law_id, "justification": f"Acquittal exposed a gap on {topic}.", "content": dict(content)})
    for law_id, count in sorted(summary.get("guilty_counts", {}).items()):
        law = registry.get(law_id)
        if law is None or count < 2 or law.penalty is None or law.penalty.kind == "text":
            continue
        scale = 1.5 if bias == "pro_company" else 2.0
        if law.penalty.kind == "fixed":
            new_penalty: Any = law.penalty.amount * scale
        else:
            new_penalty = f"{law.penalty.factor * scale * 100:g}% of {law.penalty.base}"
        problems.append({"problem_type": "Deterrence Failure", "details": f"{law_id} broken {count} times"})
        changes.append({"action": "AMEND", "law_code": law_id, "justification": "Penalty fails to deter.", "content": {"penalty": new_penalty}})
    most = [{"law_code": k, "violation_count": v} for k, v in sorted(summary.get("guilty_counts", {}).items())]
    return json.dumps({"analysis_summary": {"most_frequent_violations": most, "identified_problems": problems}, "changes": changes})


# --- construction ----------------------------------------------------------


@dataclass
class MicroBackends:
    company: Backend
    laborer: Backend
    gm: Backend
    judge: Backend
    legislator: Backend

    def ids(self) -> dict[str, str]:
        return {role: getattr(self, role).backend_id for role in ("company", "laborer", "gm", "judge", "legislator")}


def make_micro_backends(spec: str) -> MicroBackends:
    """``scripted:<baseline|exploit>`` or ``remote:<config.json>`` for every role."""
    kind, _, arg = spec.partition(":")
    if kind == "scripted":
        b: Backend = ScriptedMicroBackend(arg or "baseline")
    elif kind == "remote":
        b = RemoteChatBackend(load_remote_config(arg))
    else:
        raise ConfigError(f"backend must be scripted:<name> or remote:<config>, got {spec!r}")
    return MicroBackends(b, b, b, b, b)
