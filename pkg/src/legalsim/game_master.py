"""Game master: read free-text actions, rule on work status, apply effects."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .errors import ParseError
from .legal import extract_json

WORKING = "WORKING"
NOT_WORKING = "NOT WORKING"
RISK_LEVELS = ("High Risk", "Medium Risk", "No Risk")
RULES = ("contradiction", "rule1", "rule2", "rule3", "default")


# --- rule engine ------------------------------------------------------------

_STOPPAGE = re.compile(
    r"\b(strik(?:e|es|ing)|walk(?:s|ing)?[- ]?outs?|walk(?:ing)? off|picket(?:s|ing)?(?: line)?|protest(?:s|ing)?|"
    r"demonstrat(?:e|ion|ing)|block(?:s|ing|ade)?\b[^.;]*\b(?:gates?|entrance|factory|production|line)|"
    r"work stoppage|stop(?:ping)? work(?:ing)?|down(?:ing)? tools|sit-?ins?|slow-?downs?|go-?slow|"
    r"refus(?:e|es|ing) to work|stay(?:ing)? (?:at )?home|skip(?:ping)? work|boycott(?:s|ing)?|occupy(?:ing)?)\b",
    re.I,
)
_OTHER_NONWORK = re.compile(
    r"\b(sabotag\w*|damag(?:e|es|ing)\b[^.;]*\b(?:equipment|machine\w*|tools?|products?|property)|"
    r"destroy\w*|break(?:ing)? (?:the |a )?(?:machine\w*|equipment)|quit(?:s|ting)?|resign\w*|"
    r"leav(?:e|ing) (?:the|my) job|been fired|get fired|terminated)\b",
    re.I,
)
_ANCILLARY = re.compile(
    r"\b(sue|sues|suing|sued|lawsuits?|petitions?|union meetings?|legal (?:options|action|advice)|"
    r"complaints?|negotiat\w*|discuss\w*|plan\w*|talk\w*|meet\w*|organi[sz]e a union|court)\b",
    re.I,
)
_WORK_CLAIM = re.compile(
    r"\b(work(?:ing)? (?:the |my )?(?:full |entire |whole |normal )?shifts?|continu\w* (?:my |to )?(?:normal |regular )?work\w*|"
    r"keep(?:s|ing)? working|work(?:ing)? normally|while working|perform\w* (?:my )?(?:normal |regular |production )?(?:duties|tasks|job)|"
    r"at my (?:post|station)|complet\w* my (?:production )?tasks)\b",
    re.I,
)
_CONJOINED = re.compile(r"\b(and|while|also|as well as|at the same time|simultaneously|plus)\b", re.I)

# a stoppage word only counts as a tangible act when it is not merely talked about
_SOFTENERS = re.compile(
    r"\b(discuss\w*|talk\w* (?:about|of)|plan\w*|consider\w*|think\w* about|debat\w*|propos\w*|mention\w*|"
    r"threat\w*|warn\w*|research\w*|explor\w*|rumou?rs?|possib\w*|future|not|never|avoid\w*|without|"
    r"instead of|refrain\w*|rather than|against (?:a|any)|might|may|could|would|whether)\s+(?:\w+\s+){0,4}$",
    re.I,
)


@dataclass(frozen=True)
class RuleMatch:
    rule: str
    status: str
    reason: str


def _tangible(pattern: re.Pattern[str], text: str) -> str | None:
    for m in pattern.finditer(text):
        word = m.group(0)
        before = text[: m.start()]
        after = text[m.end() :]
        if re.search(r"\b(?:to|in)\s+$", before) and word.lower().startswith("protest"):
            continue  # "sue ... to protest the cut" names a purpose, not an act
        if word.lower().startswith("strik") and re.match(r"\s+(?:a|an)\s+(?:deal|balance|agreement|bargain|compromise)\b", after, re.I):
            continue
        clause = re.split(r"[.;:,]|\bbut\b|\bwhile\b|\band\b", before)[-1]
        if _SOFTENERS.search(clause + " "):
            continue
        return word
    return None


def classify_intent(text: str, *, litigation_absence: bool = False) -> RuleMatch:
    """Deterministic work-status rule with fixed precedence.

    contradiction > rule1 (stoppage) > rule2 (sabotage/quit) > rule3
    (ancillary, e.g. suing) > default (working).
    """
    t = " ".join(text.split())
    stoppage = _tangible(_STOPPAGE, t)
    other = _tangible(_OTHER_NONWORK, t)
    claim = _WORK_CLAIM.search(t)
    if claim and (stoppage or other) and _CONJOINED.search(t):
        act = stoppage or other
        return RuleMatch("contradiction", NOT_WORKING, f"claims to work ({claim.group(0)!r}) while also {act!r}; self-contradictory")
    if stoppage:
        return RuleMatch("rule1", NOT_WORKING, f"tangible work stoppage ({stoppage!r})")
    if other:
        return RuleMatch("rule2", NOT_WORKING, f"non-work activity ({other!r})")
    anc = _ANCILLARY.search(t)
    if anc:
        if litigation_absence and is_litigation(t):
            return RuleMatch("rule3", NOT_WORKING, "filing a lawsuit counts as an absence under the current litigation rules")
        return RuleMatch("rule3", WORKING, f"ancillary activity ({anc.group(0)!r}) does not stop production")
    return RuleMatch("default", WORKING, "performing production tasks")


# --- lawsuits in free text ---------------------------------------------------

_SUE = re.compile(
    r"\b(sue|sues|suing|file (?:a |an )?(?:formal )?(?:legal )?(?:lawsuit|suit|claim|complaint|case)|"
    r"lawsuit against|legal action against|take\s+(?:[\w-]+\s+){1,3}to court|bring (?:a )?(?:lawsuit|suit|case))\b",
    re.I,
)
_SUE_SOFT = re.compile(
    r"\b(threat\w*|consider\w*|discuss\w*|plan\w*|think\w* about|might|may|could|would|explor\w*|research\w*|"
    r"prepar\w*|warn\w*|not|never|avoid\w*|without|instead of|rather than|whether to|possib\w*)\s+(?:\w+\s+){0,3}$",
    re.I,
)
_LABORER_ID = re.compile(r"\bLaborer[- _]?(\d+)\b", re.I)
_ALL_LABORERS = re.compile(r"\b(all|every|each)\s+(?:of\s+the\s+)?(laborers?|workers?|employees?)\b", re.I)
_COMPANY_WORDS = re.compile(r"\b(company|employer|management|the firm|corporation|boss)\b", re.I)


def is_litigation(text: str) -> bool:
    for m in _SUE.finditer(text):
        clause = re.split(r"[.;:,]|\bbut\b", text[: m.start()])[-1]
        if not _SUE_SOFT.search(clause + " "):
            return True
    return False


def extract_lawsuit(
    actor_id: str,
    text: str,
    *,
    company_id: str,
    laborer_ids: Sequence[str],
    hired_ids: Sequence[str] | None = None,
) -> list[str]:
    """Defendant ids named in a lawsuit intent (empty when it is not one)."""
    if not is_litigation(text):
        return []
    known = set(laborer_ids)
    targets: list[str] = []
    for m in _LABORER_ID.finditer(text):
        lid = f"Laborer-{m.group(1)}"
        if lid in known and lid != actor_id and lid not in targets:
            targets.append(lid)
    if actor_id == company_id:
        if not targets and _ALL_LABORERS.search(text):
            targets = list(hired_ids if hired_ids is not None else laborer_ids)
        return targets
    if company_id.lower() in text.lower() or _COMPANY_WORDS.search(text):
        targets.insert(0, company_id)
    return targets


# --- policy changes in company actions -------------------------------------

_POLICY_TAG = re.compile(r"<policy>(.*?)</policy>", re.S | re.I)
_AMOUNT = r"\$?(\d[\d,]*(?:\.\d+)?)"
_FIELDS = {
    "hourly_wage": r"(?:hourly\s+)?(?:wages?|pay\s+rate|hourly\s+rate)",
    "weekly_hours": r"(?:weekly\s+)?(?:work(?:ing)?\s+)?hours(?:\s+per\s+week)?",
    "safety_investment": r"safety(?:\s+investment|\s+spending|\s+budget)?",
}
_SAME_CLAUSE = r"(?:(?!\band\b|\bwhile\b|,)[^.;])*?"
_DOWN = r"(?:cut|reduc\w*|lower\w*|decreas\w*|drop\w*)"
_UP = r"(?:rais\w*|increas\w*|boost\w*|extend\w*)"


def parse_policy_changes(text: str, current: Mapping[str, float]) -> dict[str, float]:
    """Contract changes announced in a company action.

    Understands a ``<policy>{json}</policy>`` tag, "X to N" and
    "raise/cut X by N" phrasings, and "overtime at 1.2x"/"120%".
    """
    tag = _POLICY_TAG.search(text)
    if tag:
        try:
            doc = extract_json(tag.group(1))
            return {k: float(v) for k, v in doc.items() if k in (*_FIELDS, "overtime_multiplier")}
        except (ParseError, TypeError, ValueError):
            pass
    out: dict[str, float] = {}
    for key, noun in _FIELDS.items():
        m = re.search(noun + r"\b" + _SAME_CLAUSE + r"\bto\s+" + _AMOUNT, text, re.I)
        if m:
            out[key] = float(m.group(1).replace(",", ""))
            continue
        m = re.search(rf"({_DOWN}|{_UP})\b{_SAME_CLAUSE}{noun}\b{_SAME_CLAUSE}\bby\s+" + _AMOUNT + r"(\s*%)?", text, re.I)
        if m and key in current:
            amount = float(m.group(2).replace(",", ""))
            if m.group(3):
                amount = current[key] * amount / 100
            sign = -1 if re.match(_DOWN, m.group(1), re.I) else 1
            out[key] = current[key] + sign * amount
    m = re.search(r"overtime" + _SAME_CLAUSE + r"(\d+(?:\.\d+)?)\s*(x|×|times)", text, re.I)
    if m:
        out["overtime_multiplier"] = float(m.group(1))
    else:
        m = re.search(r"overtime" + _SAME_CLAUSE + r"(\d+(?:\.\d+)?)\s*%", text, re.I)
        if m:
            out["overtime_multiplier"] = float(m.group(1)) / 100
    if "weekly_hours" in out:
        out["weekly_hours"] = min(168.0, out["weekly_hours"])
    return {k: max(0.0, v) for k, v in out.items()}


def policy_targets(text: str, laborer_ids: Sequence[str]) -> list[str]:
    named = [f"Laborer-{m}" for m in _LABORER_ID.findall(text)]
    named = [n for n in named if n in laborer_ids]
    return named or list(laborer_ids)


# --- fact assessment --------------------------------------------------------


@dataclass
class FactAssessment:
    narrative: str
    economic_impact: dict[str, str]
    welfare_impact: str
    legal_risk: dict[str, str]
    actor_id: str = ""
    anomaly: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "narrative": self.narrative,
            "economic_impact": dict(self.economic_impact),
            "welfare_impact": self.welfare_impact,
            "legal_risk": dict(self.legal_risk),
        }


def neutral_assessment(actor_id: str, anomaly: str | None = None) -> FactAssessment:
    return FactAssessment(
        narrative="The action has no assessable consequence.",
        economic_impact={"company": "No Impact", "laborers": "No Impact"},
        welfare_impact="No Impact",
        legal_risk={"level": "No Risk", "reason": ""},
        actor_id=actor_id,
        anomaly=anomaly,
    )


def _label(value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ParseError(f"expected a descriptive label, got {value!r}")
    if re.search(r"\d", value):
        raise ParseError(f"labels must be words, not numbers: {value!r}")
    return value.strip()


def parse_fact_assessment(text: str, actor_id: str) -> FactAssessment:
    doc = extract_json(text)
    try:
        econ = doc["economic_impact"]
        risk = doc["legal_risk"]
        level = str(risk["level"]).strip()
        canon = {r.lower(): r for r in RISK_LEVELS}
        if level.lower() not in canon:
            raise ParseError(f"unknown legal risk level {level!r}")
        return FactAssessment(
            narrative=str(doc["narrative"]),
            economic_impact={"company": _label(econ["company"]), "laborers": _label(econ["laborers"])},
            welfare_impact=_label(doc["welfare_impact"]),
            legal_risk={"level": canon[level.lower()], "reason": str(risk.get("reason", ""))},
            actor_id=actor_id,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"fact assessment missing field: {exc}") from exc


def assess_action(
    actor_id: str,
    intent: Any,
    context: str,
    backend: Any,
    *,
    prompt: str = "",
    extra_context: Mapping[str, Any] | None = None,
    temperature: float = 1.0,
    max_tokens: int = 1024,
) -> FactAssessment:
    """Qualitative consequences of one action; falls back to a neutral read."""
    action = intent.action if hasattr(intent, "action") else str(intent)
    if not action.strip():
        raise ValueError("intent must be non-empty")
    ctx = {"role": "gm_fact", "actor_id": actor_id, "action": action, "environment": context, **(extra_context or {})}
    try:
        raw = backend.complete(prompt, temperature=temperature, max_tokens=max_tokens, context=ctx)
        return parse_fact_assessment(raw, actor_id)
    except ParseError as exc:
        return neutral_assessment(actor_id, f"ParseError: {exc}")
    except Exception as exc:
        return neutral_assessment(actor_id, f"{type(exc).__name__}: {exc}")


def impact_fraction(label: str, table: Mapping[str, float]) -> float:
    """Numeric capital delta for a qualitative label (0 when unmapped)."""
    key = " ".join(label.lower().replace("_", " ").split())
    if key in table:
        return table[key]
    size = next((s for s in ("significant", "moderate", "minor") if s in key), None)
    if size is None and re.search(r"\b(severe|major|heavy|substantial|large)\b", key):
        size = "significant"
    if size is None and re.search(r"\b(slight|small|mild)\b", key):
        size = "minor"
    kind = "loss" if re.search(r"\b(loss|decline|damage|drop|cost|negative|harm)\w*", key) else "profit" if re.search(r"\b(profit|gain|increase|positive|benefit)\w*", key) else None
    if size and kind:
        return table.get(f"{size} {kind}", 0.0)
    return 0.0


# --- work status ------------------------------------------------------------


@dataclass
class WorkStatusRuling:
    reasoning: list[dict[str, str]] = field(default_factory=list)
    not_working: list[str] = field(default_factory=list)
    rules: dict[str, str] = field(default_factory=dict)
    anomalies: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        derived = [r["laborer_id"] for r in self.reasoning if r["status"] == NOT_WORKING]
        if sorted(derived) != sorted(self.not_working):
            raise ValueError("not_working must list exactly the NOT WORKING laborers")

    def status_of(self, laborer_id: str) -> str:
        for r in self.reasoning:
            if r["laborer_id"] == laborer_id:
                return r["status"]
        raise KeyError(laborer_id)

    def to_dict(self) -> dict[str, Any]:
        return {"reasoning": [dict(r) for r in self.reasoning], "not_working": list(self.not_working)}


def _canon_status(value: Any) -> str | None:
    s = " ".join(str(value).upper().replace("_", " ").split())
    return s if s in (WORKING, NOT_WORKING) else None


def parse_work_status(text: str) -> dict[str, str]:
    doc = extract_json(text)
    rows = doc.get("reasoning")
    if not isinstance(rows, list):
        raise ParseError("work-status JSON lacks a reasoning list")
    out = {}
    for row in rows:
        if not isinstance(row, Mapping) or "laborer_id" not in row:
            raise ParseError("malformed reasoning entry")
        status = _canon_status(row.get("status"))
        if status is None:
            raise ParseError(f"bad status {row.get('status')!r}")
        out[str(row["laborer_id"])] = status
    return out


def adjudicate_work_status(
    company_action: str,
    intents: Mapping[str, str],
    hiring: Mapping[str, bool],
    backend: Any,
    *,
    prompt: str = "",
    litigation_absence: bool = False,
    temperature: float = 1.0,
    max_tokens: int = 2048,
) -> WorkStatusRuling:
    """Rule on each hired laborer; the rule engine overrides the backend."""
    hired = [lid for lid, h in hiring.items() if h]
    missing = [lid for lid in hired if lid not in intents]
    if missing:
        raise ValueError(f"no intent for hired laborers {missing}")
    anomalies: list[str] = []
    backend_view: dict[str, str] = {}
    ctx = {"role": "gm_work", "company_action": company_action, "intents": dict(intents), "hiring": dict(hiring), "litigation_absence": litigation_absence}
    try:
        backend_view = parse_work_status(backend.complete(prompt, temperature=temperature, max_tokens=max_tokens, context=ctx))
    except ParseError as exc:
        anomalies.append(f"ParseError: {exc}; using rule engine only")
    except Exception as exc:
        anomalies.append(f"{type(exc).__name__}: {exc}; using rule engine only")

    reasoning, not_working, rules = [], [], {}
    for lid in hired:
        match = classify_intent(intents[lid], litigation_absence=litigation_absence)
        said = backend_view.get(lid)
        if backend_view and said is None:
            anomalies.append(f"backend ruling omitted {lid}")
        elif said is not None and said != match.status:
            anomalies.append(f"backend ruled {lid} {said}; rule engine ({match.rule}) says {match.status}")
        reasoning.append(
            {
                "laborer_id": lid,
                "action": intents[lid],
                "analysis": f"{match.rule}: {match.reason}",
                "status": match.status,
            }
        )
        rules[lid] = match.rule
        if match.status == NOT_WORKING:
            not_working.append(lid)
    return WorkStatusRuling(reasoning, not_working, rules, anomalies)


# --- applying effects ---------------------------------------------------


def apply_consequences(
    world: Any,
    assessments: Mapping[str, FactAssessment],
    ruling: WorkStatusRuling,
    *,
    intents: Mapping[str, Any] | None = None,
    company_action: str = "",
) -> Any:
    """The single place where GM judgements change the world.

    Applies the company's announced contract changes, marks non-working
    laborers absent, scales capital by the mapped loss of striking
    laborers, handles quits, and queues lawsuit intents.
    """
    company = world.company
    cid = company.company_id
    lab_ids = list(world.laborers)

    if company_action:
        lab0 = world.laborers[lab_ids[0]]
        current = {"hourly_wage": lab0.hourly_wage, "weekly_hours": lab0.weekly_hours, "safety_investment": company.safety_investment, "overtime_multiplier": lab0.overtime_multiplier}
        changes = parse_policy_changes(company_action, current)
        if changes:
            targets = policy_targets(company_action, lab_ids)
            from .world import overtime_text

            if "safety_investment" in changes:
                company.safety_investment = changes["safety_investment"]
            for lid in targets:
                lab = world.laborers[lid]
                if "hourly_wage" in changes:
                    lab.hourly_wage = changes["hourly_wage"]
                if "weekly_hours" in changes:
                    lab.weekly_hours = changes["weekly_hours"]
                if "overtime_multiplier" in changes:
                    lab.overtime_multiplier = changes["overtime_multiplier"]
                    lab.overtime_arrangement = overtime_text(lab.overtime_multiplier)
            world.emit("consequences", cid, "policy_change", {"changes": changes, "targets": targets})

    for lid in lab_ids:
        lab = world.laborers[lid]
        if not lab.hired:
            continue
        status = ruling.status_of(lid)
        rule = ruling.rules.get(lid, "default")
        if status == NOT_WORKING:
            lab.absent_this_turn = True
            world.turn_rules[lid] = rule
        action = intents[lid].action if intents and lid in intents else ""
        if rule == "rule2" and re.search(r"\b(quit\w*|resign\w*|leav(?:e|ing) (?:the|my) job)\b", action, re.I):
            lab.hired = False
            world.emit("consequences", lid, "laborer_quit", {"action": action})
        world.emit("consequences", lid, "work_status", {"status": status, "rule": rule, "action": action})

    hired = world.hired_ids() or lab_ids
    table = world.config.GM_IMPACT_TABLE
    total = 0.0
    for lid in ruling.not_working:
        a = assessments.get(lid)
        if a is not None:
            total += impact_fraction(a.economic_impact["company"], table)
    if total:
        factor = 1 + total / len(hired)
        delta = company.capital * factor - company.capital
        world.adjust(cid, delta)
        world.flow("gm_impact", delta)
        world.emit("consequences", cid, "capital_impact", {"factor": factor, "delta": delta, "not_working": list(ruling.not_working)})

    if intents:
        for actor, intent in intents.items():
            if getattr(intent, "is_lawsuit", False):
                for target in intent.lawsuit_targets:
                    world.pending_suits.append((actor, target, intent.action))
    world.sync_employees()
    return world
