"""Law registry, lawsuits, verdicts, corruption, enforcement and legislation."""

from __future__ import annotations

import copy
import json
import random
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    ChangeValidationError,
    InsufficientFunds,
    LegalSystemDisabled,
    ParseError,
    SchemaError,
    UnknownBaseQuantity,
    VerdictParseError,
)

PERIODS = ("per_violation", "per_action_turn")
BASE_QUANTITIES = ("shortfall", "wage", "hours", "safety_investment", "company_profit", "violation_turns")
BIASES = ("none", "pro_company", "pro_laborer")
VERDICTS = ("guilty", "not_guilty")
CONDITION_QUANTITIES = ("hourly_wage", "safety_investment", "overtime_multiplier", "weekly_hours", "strike_turns")

_BASE_ALIASES = {
    "shortfall": "shortfall",
    "difference": "shortfall",
    "wage shortfall": "shortfall",
    "unpaid": "shortfall",
    "wage": "wage",
    "hourly wage": "wage",
    "hours": "hours",
    "weekly work hours": "hours",
    "work hours": "hours",
    "safety investment": "safety_investment",
    "safety_investment": "safety_investment",
    "company profit": "company_profit",
    "company_profit": "company_profit",
    "profit": "company_profit",
    "violation turns": "violation_turns",
    "violation_turns": "violation_turns",
}


# --- money expressions ------------------------------------------------------


@dataclass(frozen=True)
class MoneyExpr:
    """A penalty or compensation formula.

    ``fixed`` pays ``amount``; ``percent`` pays ``factor`` times the named base
    (``factor`` 2.0 is "200%"); ``text`` is prose only a judge can evaluate.
    """

    kind: str
    amount: float = 0.0
    factor: float = 0.0
    base: str = ""
    text: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "percent", "text"):
            raise SchemaError(f"unknown money expression kind {self.kind!r}")
        if self.kind == "percent" and self.base not in BASE_QUANTITIES:
            raise UnknownBaseQuantity(self.base)

    @property
    def structured(self) -> bool:
        return self.kind != "text"

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"{self.amount:g}"
        if self.kind == "percent":
            return f"{self.factor * 100:g}% of {self.base}"
        return self.text

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "fixed":
            d["amount"] = self.amount
        elif self.kind == "percent":
            d.update(factor=self.factor, base=self.base)
        else:
            d["text"] = self.text
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MoneyExpr":
        return cls(
            kind=d["kind"],
            amount=float(d.get("amount", 0.0)),
            factor=float(d.get("factor", 0.0)),
            base=str(d.get("base", "")),
            text=str(d.get("text", "")),
        )


_NUM = r"(\d[\d,]*(?:\.\d+)?)"
_PERCENT_RE = re.compile(_NUM + r"\s*%\s*(?:of\s+)?(?:the\s+)?([a-z_ ]+)", re.I)
_FIXED_RE = re.compile(r"^\s*(?:pay\s+(?:a\s+)?(?:penalty|fine)\s+of\s+)?\$?\s*" + _NUM + r"\s*(?:usd|dollars)?\s*\.?\s*$", re.I)
_NONE_WORDS = {"", "n/a", "na", "none", "null", "0 (none)"}


def _num(s: str) -> float:
    return float(s.replace(",", ""))


def parse_money_expr(value: Any) -> MoneyExpr | None:
    """Read a number, a percentage phrase or free text into a ``MoneyExpr``.

    Returns ``None`` for "N/A"-style blanks.
    """
    if value is None:
        return None
    if isinstance(value, Mapping):
        return MoneyExpr.from_dict(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return MoneyExpr("fixed", amount=float(value))
    text = str(value).strip()
    if text.lower() in _NONE_WORDS:
        return None
    m = _FIXED_RE.match(text)
    if m:
        return MoneyExpr("fixed", amount=_num(m.group(1)))
    m = _PERCENT_RE.search(text)
    if m:
        phrase = m.group(2).strip().lower()
        for alias in sorted(_BASE_ALIASES, key=len, reverse=True):
            if alias in phrase:
                return MoneyExpr("percent", factor=_num(m.group(1)) / 100, base=_BASE_ALIASES[alias])
    return MoneyExpr("text", text=text)


def evaluate_money_expr(
    expr: MoneyExpr | str | float | None,
    base: Mapping[str, float],
    period: str = "per_violation",
) -> float:
    """Currency amount of ``expr`` given the case's base quantities.

    ``per_action_turn`` multiplies by ``violation_turns``; the result is
    never negative.  Text expressions cannot be evaluated here.
    """
    if not isinstance(expr, MoneyExpr):
        expr = parse_money_expr(expr)
    if expr is None:
        return 0.0
    if expr.kind == "text":
        raise ValueError(f"free-text expression needs a judge: {expr.text!r}")
    unknown = set(base) - set(BASE_QUANTITIES)
    if unknown:
        raise UnknownBaseQuantity(sorted(unknown)[0])
    if expr.kind == "fixed":
        value = expr.amount
    else:
        if expr.base not in base:
            raise UnknownBaseQuantity(expr.base)
        value = expr.factor * float(base[expr.base])
    if period == "per_action_turn":
        value *= float(base.get("violation_turns", 0))
    elif period not in PERIODS:
        raise SchemaError(f"unknown period {period!r}")
    return max(0.0, value)


# --- laws -------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    """Machine-checkable threshold a law imposes on one contract quantity."""

    quantity: str
    minimum: float | None = None
    maximum: float | None = None
    applies_above_hours: float | None = None

    def __post_init__(self) -> None:
        if self.quantity not in CONDITION_QUANTITIES:
            raise SchemaError(f"unknown condition quantity {self.quantity!r}")

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Condition":
        def opt(key: str) -> float | None:
            return None if d.get(key) is None else float(d[key])

        return cls(str(d["quantity"]), opt("minimum"), opt("maximum"), opt("applies_above_hours"))


@dataclass
class LawCode:
    law_id: str
    description: str
    penalty: MoneyExpr | None = None
    compensation: MoneyExpr | None = None
    period: str | None = "per_violation"
    version: int = 1
    history: list[dict[str, Any]] = field(default_factory=list)
    condition: Condition | None = None
    penalty_text: str = ""
    compensation_text: str = ""

    def __post_init__(self) -> None:
        if (self.penalty or self.compensation) and self.period not in PERIODS:
            raise SchemaError(f"law {self.law_id}: period must be one of {PERIODS}")

    @property
    def structured(self) -> bool:
        """True when the engine can check and price violations without a judge."""
        exprs = [e for e in (self.penalty, self.compensation) if e is not None]
        return self.condition is not None and all(e.structured for e in exprs)

    def public_view(self) -> dict[str, Any]:
        """The law as agents see it."""
        return {
            "description": self.description,
            "penalty": self.penalty_text or (self.penalty.describe() if self.penalty else "N/A"),
            "compensation": self.compensation_text or (self.compensation.describe() if self.compensation else "N/A"),
            "period": self.period,
        }

    def snapshot(self) -> dict[str, Any]:
        d = {**self.public_view(), "version": self.version}
        d["penalty_expr"] = self.penalty.to_dict() if self.penalty else None
        d["compensation_expr"] = self.compensation.to_dict() if self.compensation else None
        d["condition"] = self.condition.to_dict() if self.condition else None
        return d

    def to_json(self) -> dict[str, Any]:
        return {**self.snapshot(), "history": copy.deepcopy(self.history)}

    @classmethod
    def from_json(cls, law_id: str, d: Mapping[str, Any]) -> "LawCode":
        if "description" not in d:
            raise SchemaError(f"law {law_id} lacks a description")
        penalty = parse_money_expr(d["penalty_expr"]) if d.get("penalty_expr") else parse_money_expr(d.get("penalty"))
        comp = (
            parse_money_expr(d["compensation_expr"])
            if d.get("compensation_expr")
            else parse_money_expr(d.get("compensation"))
        )
        text_of = lambda v: "" if v is None or isinstance(v, Mapping) else str(v)
        return cls(
            law_id=law_id,
            description=str(d["description"]),
            penalty=penalty,
            compensation=comp,
            period=d.get("period") or ("per_violation" if (penalty or comp) else None),
            version=int(d.get("version", 1)),
            history=list(d.get("history", [])),
            condition=Condition.from_dict(d["condition"]) if d.get("condition") else None,
            penalty_text=text_of(d.get("penalty")),
            compensation_text=text_of(d.get("compensation")),
        )


class LawRegistry:
    """Ordered set of laws plus a registry-wide revision counter."""

    def __init__(self, laws: Iterable[LawCode] = ()):
        self.laws: dict[str, LawCode] = {}
        self.revision = 0
        for law in laws:
            self.laws[law.law_id] = law

    @classmethod
    def from_laws(cls, laws: Iterable[LawCode]) -> "LawRegistry":
        return cls(laws)

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "LawRegistry":
        return cls(LawCode.from_json(k, v) for k, v in doc.items() if not k.startswith("_"))

    def __contains__(self, law_id: object) -> bool:
        return law_id in self.laws

    def __len__(self) -> int:
        return len(self.laws)

    def __iter__(self):
        return iter(self.laws.values())

    def get(self, law_id: str) -> LawCode | None:
        return self.laws.get(law_id)

    @property
    def empty(self) -> bool:
        return not self.laws

    def public_view(self) -> dict[str, Any]:
        return {k: v.public_view() for k, v in self.laws.items()}

    def to_json(self) -> dict[str, Any]:
        return {k: v.to_json() for k, v in self.laws.items()}

    def apply(self, change: "LegislativeChange", turn: int) -> LawCode:
        """Create or amend a law; amendments push the old version to history."""
        change.validate(self)
        content = dict(change.content)
        self.revision += 1
        if change.action == "CREATE":
            law = LawCode.from_json(change.law_code, content)
            law.version = 1
            law.history = []
            self.laws[change.law_code] = law
            return law
        old = self.laws[change.law_code]
        merged = old.snapshot()
        for key in ("description", "penalty", "compensation", "period", "condition"):
            if key in content and content[key] is not None:
                merged[key] = content[key]
                if key in ("penalty", "compensation"):
                    merged[f"{key}_expr"] = None
        entry = {**old.snapshot(), "replaced_at_turn": turn, "justification": change.justification}
        law = LawCode.from_json(change.law_code, merged)
        law.version = old.version + 1
        law.history = old.history + [entry]
        self.laws[change.law_code] = law
        return law

    def version_of(self, law_id: str, version: int) -> dict[str, Any]:
        """Reconstruct an earlier version from history."""
        law = self.laws[law_id]
        if version == law.version:
            return law.snapshot()
        for entry in law.history:
            if entry["version"] == version:
                return {k: v for k, v in entry.items() if k not in ("replaced_at_turn", "justification")}
        raise KeyError(f"{law_id} has no version {version}")


def load_law_file(path: str | Path) -> list[LawCode]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return list(LawRegistry.from_json(doc))


def builtin_laws(name: str = "initialized") -> list[LawCode]:
    doc = json.loads((resources.files("legalsim.data.laws") / f"{name}.json").read_text("utf-8"))
    return list(LawRegistry.from_json(doc))


# --- suits and verdicts -------------------------------------------------------


@dataclass(frozen=True)
class LegalConfig:
    enabled: bool = False
    corruption_probability: float = 0.0
    bias: str = "none"
    litigation_fee: float = 0.0
    litigation_counts_as_absence: bool = False
    legislation_interval: int = 2
    legislation_enabled: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.corruption_probability <= 1.0:
            raise ValueError("corruption_probability must be in [0, 1]")
        if self.bias not in BIASES:
            raise ValueError(f"bias must be one of {BIASES}")
        if self.litigation_fee < 0:
            raise ValueError("litigation_fee must be >= 0")
        if self.legislation_interval < 1:
            raise ValueError("legislation_interval must be >= 1")


@dataclass
class Lawsuit:
    suit_id: str
    plaintiff_id: str
    defendant_id: str
    reason: str
    filed_turn: int
    fee_paid: float = 0.0
    status: str = "filed"

    def __post_init__(self) -> None:
        if self.plaintiff_id == self.defendant_id:
            raise ValueError("plaintiff and defendant must differ")


@dataclass
class Verdict:
    reasoning_steps: str = ""
    verdict: str = "not_guilty"
    justification: str = ""
    applicable_law: str | None = None
    calculation_steps: str = ""
    penalty: float = 0.0
    compensation: float = 0.0
    corrupted: bool = False
    anomalies: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise VerdictParseError(f"verdict must be guilty/not_guilty, got {self.verdict!r}")
        self.penalty = max(0.0, float(self.penalty))
        self.compensation = max(0.0, float(self.compensation))
        if self.verdict == "not_guilty":
            self.penalty = self.compensation = 0.0

    @property
    def guilty(self) -> bool:
        return self.verdict == "guilty"

    def to_dict(self) -> dict[str, Any]:
        return {
            "reasoning_steps": self.reasoning_steps,
            "verdict": self.verdict,
            "justification": self.justification,
            "applicable_law": self.applicable_law,
            "calculation_steps": self.calculation_steps,
            "penalty": self.penalty,
            "compensation": self.compensation,
            "corrupted": self.corrupted,
        }


def acquitted(reason: str, anomalies: Sequence[str] = ()) -> Verdict:
    return Verdict(verdict="not_guilty", justification=reason, anomalies=list(anomalies))


def extract_json(text: str) -> dict[str, Any]:
    """First JSON object in ``text`` (fenced or bare)."""
    fence = re.search(r"```(?:json)?\s*(\{.*?\})\s*```", text, re.S)
    candidates = [fence.group(1)] if fence else []
    start = text.find("{")
    if start >= 0:
        candidates.append(text[start : text.rfind("}") + 1])
    for cand in candidates:
        try:
            doc = json.loads(cand)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            return doc
    raise ParseError("no JSON object found in response")


def _to_amount(value: Any) -> float:
    if value is None or value == "":
        return 0.0
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = re.search(r"-?\d[\d,]*(?:\.\d+)?", str(value))
    if not m:
        raise VerdictParseError(f"not a number: {value!r}")
    return float(m.group(0).replace(",", ""))


def parse_verdict(text: str) -> Verdict:
    try:
        doc = extract_json(text)
    except ParseError as exc:
        raise VerdictParseError(str(exc)) from exc
    raw = str(doc.get("verdict", "")).strip().lower().replace(" ", "_").replace("-", "_")
    if raw not in VERDICTS:
        raise VerdictParseError(f"unrecognised verdict {doc.get('verdict')!r}")
    law = doc.get("applicable_law")
    return Verdict(
        reasoning_steps=str(doc.get("reasoning_steps", "")),
        verdict=raw,
        justification=str(doc.get("justification", "")),
        applicable_law=None if law in (None, "", "N/A", "None", "none") else str(law),
        calculation_steps=str(doc.get("calculation_steps", "")),
        penalty=_to_amount(doc.get("penalty")),
        compensation=_to_amount(doc.get("compensation")),
    )


def cited_law_ids(applicable_law: str | None, registry: LawRegistry) -> list[str]:
    """Registry ids mentioned in a verdict's ``applicable_law`` field, in order."""
    if not applicable_law:
        return []
    found = []
    for token in re.findall(r"[A-Za-z][A-Za-z0-9_]*\d+|[A-Z][A-Z0-9_]+", applicable_law):
        if token in registry and token not in found:
            found.append(token)
    return found


# --- violation accounting ---------------------------------------------------


def _violation_gap(cond: Condition, entry: Any, standard_hours: float) -> float:
    """How far one contract-log entry falls outside the condition (0 if within)."""
    if cond.quantity == "strike_turns":
        return 1.0 if entry.not_working_rule in ("rule1", "rule2", "contradiction") else 0.0
    if cond.applies_above_hours is not None and entry.weekly_hours <= cond.applies_above_hours:
        return 0.0
    value = getattr(entry, cond.quantity)
    if cond.minimum is not None and value < cond.minimum:
        return cond.minimum - value
    if cond.maximum is not None and value > cond.maximum:
        return value - cond.maximum
    return 0.0


def _gap_money(cond: Condition, gap: float, entry: Any, weeks: float, revenue_per_hour: float) -> float:
    if cond.quantity == "hourly_wage":
        return gap * entry.hours_worked
    if cond.quantity == "overtime_multiplier":
        return gap * entry.hourly_wage * entry.overtime_hours_worked
    if cond.quantity == "weekly_hours":
        return gap * weeks * entry.hourly_wage
    if cond.quantity == "strike_turns":
        return revenue_per_hour * entry.weekly_hours * weeks
    return gap  # safety investment: already money


def law_base_quantities(world: Any, law: LawCode, laborer_id: str) -> dict[str, float]:
    """Base quantities for ``law`` over the not-yet-compensated contract history.

    ``shortfall`` totals the money gap for per-violation laws and is the
    mean gap per violating turn for per-action-turn laws, so that
    ``shortfall * violation_turns`` recovers the total.
    """
    lab = world.laborers[laborer_id]
    base = {
        "shortfall": 0.0,
        "wage": lab.hourly_wage,
        "hours": lab.weekly_hours,
        "safety_investment": world.company.safety_investment,
        "company_profit": max(0.0, world.last_turn_profit),
        "violation_turns": 0.0,
    }
    cond = law.condition
    if cond is None:
        return base
    since = world.compensated_until.get((laborer_id, law.law_id), 0)
    weeks = world.config.weeks_per_turn
    standard = world.config.NORMAL_WORK_HOURS_PER_WEEK
    total = 0.0
    turns = 0
    for entry in world.contract_log:
        if entry.laborer_id != laborer_id or entry.turn <= since:
            continue
        gap = _violation_gap(cond, entry, standard)
        if gap <= 0:
            continue
        turns += 1
        total += _gap_money(cond, gap, entry, weeks, world.company.revenue_per_labor_hour)
    base["violation_turns"] = float(turns)
    if law.period == "per_action_turn":
        base["shortfall"] = total / turns if turns else 0.0
    else:
        base["shortfall"] = total
    return base


def price_violation(law: LawCode, base: Mapping[str, float]) -> tuple[float, float, str]:
    """(penalty, compensation, worked calculation) for a structured law."""
    period = law.period or "per_violation"
    penalty = evaluate_money_expr(law.penalty, base, period) if law.penalty else 0.0
    # compensation makes the plaintiff whole once, whatever the penalty period
    comp = evaluate_money_expr(law.compensation, base, "per_violation") if law.compensation else 0.0
    if law.compensation and period == "per_action_turn" and law.compensation.kind == "percent" and law.compensation.base == "shortfall":
        comp *= base.get("violation_turns", 0.0)
    steps = (
        f"violation_turns={base['violation_turns']:g}, shortfall={base['shortfall']:.2f}; "
        f"penalty = {law.penalty.describe() if law.penalty else 'none'} ({period}) = {penalty:.2f}; "
        f"compensation = {law.compensation.describe() if law.compensation else 'none'} = {comp:.2f}"
    )
    return penalty, comp, steps


def laborer_party(suit: Lawsuit, world: Any) -> str | None:
    if world.is_laborer(suit.plaintiff_id):
        return suit.plaintiff_id
    if world.is_laborer(suit.defendant_id):
        return suit.defendant_id
    return None


def case_base_quantities(world: Any, suit: Lawsuit) -> dict[str, dict[str, float]]:
    """Per-law base quantities for the laborer party in ``suit``."""
    lid = laborer_party(suit, world)
    if lid is None:
        return {}
    return {law.law_id: law_base_quantities(world, law, lid) for law in world.registry}


def law_applies_to(law: LawCode, suit: Lawsuit, world: Any) -> bool:
    """Strike laws bind laborers; contract laws bind the company."""
    if law.condition is None:
        return True
    defendant_is_company = suit.defendant_id == world.company.company_id
    return (law.condition.quantity == "strike_turns") != defendant_is_company


# --- lifecycle --------------------------------------------------------------


def file_lawsuit(world: Any, plaintiff: str, defendant: str, reason: str, legal_cfg: LegalConfig) -> Lawsuit:
    """Open a suit; laborer plaintiffs pay the fee and may lose the turn."""
    if not legal_cfg.enabled:
        raise LegalSystemDisabled("lawsuits cannot be filed without a legal system")
    fee = legal_cfg.litigation_fee if world.is_laborer(plaintiff) else 0.0
    if fee > 0 and world.balance(plaintiff) < fee:
        world.emit("legal", plaintiff, "lawsuit_rejected", {"defendant": defendant, "reason": reason, "fee": fee, "cash": world.balance(plaintiff)})
        raise InsufficientFunds(f"{plaintiff} cannot pay the {fee:.2f} filing fee")
    suit = Lawsuit(
        suit_id=f"S{world.turn:03d}-{len(world.suits) + 1:03d}",
        plaintiff_id=plaintiff,
        defendant_id=defendant,
        reason=reason,
        filed_turn=world.turn,
        fee_paid=fee,
    )
    if fee:
        world.adjust(plaintiff, -fee)
        world.flow("litigation_fees", -fee)
    if legal_cfg.litigation_counts_as_absence and world.is_laborer(plaintiff):
        world.laborers[plaintiff].absent_this_turn = True
    world.suits.append(suit)
    world.emit(
        "legal",
        plaintiff,
        "lawsuit_filed",
        {
            "suit_id": suit.suit_id,
            "plaintiff": plaintiff,
            "defendant": defendant,
            "filer_kind": "laborer" if world.is_laborer(plaintiff) else "company",
            "reason": reason,
            "fee": fee,
            "absent": bool(legal_cfg.litigation_counts_as_absence and world.is_laborer(plaintiff)),
        },
    )
    return suit


def adjudicate(
    suit: Lawsuit,
    registry: LawRegistry,
    case_context: Mapping[str, Any],
    backend: Any,
    *,
    prompt: str = "",
    temperature: float = 1.0,
    max_tokens: int = 1024,
) -> Verdict:
    """Ask the judge backend, then enforce legality and recompute structured amounts.

    ``case_context`` carries ``base_quantities`` ({law_id: {...}}) and
    ``applicable_laws`` (ids that may bind this defendant).
    """
    anomalies: list[str] = []
    verdict: Verdict | None = None
    ctx = {"role": "judge", "suit": suit, "registry": registry, **case_context}
    for attempt in (1, 2):
        try:
            verdict = parse_verdict(backend.complete(prompt, temperature=temperature, max_tokens=max_tokens, context=ctx))
            break
        except VerdictParseError as exc:
            anomalies.append(f"verdict_parse_error (attempt {attempt}): {exc}")
        except Exception as exc:  # backend failure: same fallback as an unreadable verdict
            anomalies.append(f"judge_backend_error (attempt {attempt}): {type(exc).__name__}: {exc}")
    if verdict is None:
        return acquitted("No valid verdict could be obtained; defaulting to not guilty.", anomalies)
    verdict.anomalies = anomalies + verdict.anomalies

    if not verdict.guilty:
        return verdict
    if registry.empty:
        verdict.anomalies.append("guilty verdict with an empty law registry coerced to not_guilty")
        return acquitted("No law exists; no penalty without a law.", verdict.anomalies)
    cited = cited_law_ids(verdict.applicable_law, registry)
    allowed = set(case_context.get("applicable_laws", [law.law_id for law in registry]))
    cited = [c for c in cited if c in allowed]
    if not cited:
        verdict.anomalies.append(f"guilty verdict cites no applicable registry law ({verdict.applicable_law!r}); coerced to not_guilty")
        return acquitted("The cited law does not exist or does not bind the defendant.", verdict.anomalies)
    verdict.applicable_law = ", ".join(cited)

    bases = case_context.get("base_quantities", {})
    structured = [registry.get(c) for c in cited if registry.get(c).structured and c in bases]  # type: ignore[union-attr]
    if structured:
        violated = [law for law in structured if bases[law.law_id]["violation_turns"] > 0]
        unstructured_cited = len(structured) < len(cited)
        if not violated and not unstructured_cited:
            verdict.anomalies.append("cited law shows no violation in the contract record; coerced to not_guilty")
            return acquitted("The record shows no violation of the cited law.", verdict.anomalies)
        if violated and not unstructured_cited:
            penalty = comp = 0.0
            steps = []
            for law in violated:
                p, c, s = price_violation(law, bases[law.law_id])
                penalty += p
                comp += c
                steps.append(f"{law.law_id}: {s}")
            if abs(penalty - verdict.penalty) > 0.005 or abs(comp - verdict.compensation) > 0.005:
                verdict.anomalies.append(
                    f"judge amounts (penalty {verdict.penalty:.2f}, compensation {verdict.compensation:.2f}) "
                    f"replaced by formula values ({penalty:.2f}, {comp:.2f})"
                )
            verdict.penalty, verdict.compensation = penalty, comp
            verdict.applicable_law = ", ".join(l.law_id for l in violated)
            verdict.calculation_steps = "; ".join(steps)
    return verdict


def verdict_beneficiary(verdict: Verdict, suit: Lawsuit, laborer_ids: Iterable[str]) -> str:
    favoured = suit.plaintiff_id if verdict.guilty else suit.defendant_id
    return "laborer" if favoured in set(laborer_ids) else "company"


def apply_corruption(
    verdict: Verdict,
    beneficiary: str,
    legal_cfg: LegalConfig,
    rng: random.Random,
    *,
    law: LawCode | None = None,
    base: Mapping[str, float] | None = None,
) -> Verdict:
    """With probability p, overturn a laborer-favourable verdict.

    A guilty verdict won by a laborer becomes not_guilty.  An acquittal of a
    laborer defendant becomes guilty under ``law`` (priced from ``base`` when
    the law is structured); with no law to cite it cannot be flipped.
    """
    if beneficiary not in ("laborer", "company", "neutral"):
        raise ValueError(f"unknown beneficiary {beneficiary!r}")
    if beneficiary != "laborer" or legal_cfg.corruption_probability <= 0:
        return verdict
    if rng.random() >= legal_cfg.corruption_probability:
        return verdict
    if verdict.guilty:
        out = acquitted("Verdict overturned in the company's favour.", verdict.anomalies)
        out.reasoning_steps = verdict.reasoning_steps
        out.corrupted = True
        return out
    if law is None:
        return verdict
    penalty = comp = 0.0
    steps = "no formula"
    if law.structured and base is not None:
        penalty, comp, steps = price_violation(law, base)
    return Verdict(
        reasoning_steps=verdict.reasoning_steps,
        verdict="guilty",
        justification="Verdict overturned in the company's favour.",
        applicable_law=law.law_id,
        calculation_steps=steps,
        penalty=penalty,
        compensation=comp,
        corrupted=True,
        anomalies=list(verdict.anomalies),
    )


def enforce(verdict: Verdict, suit: Lawsuit, world: Any) -> Any:
    """Move compensation defendant -> plaintiff; fines leave the system."""
    suit.status = "adjudicated"
    world.verdicts[suit.suit_id] = verdict
    if not verdict.guilty:
        return world
    if verdict.compensation:
        world.adjust(suit.defendant_id, -verdict.compensation)
        world.adjust(suit.plaintiff_id, verdict.compensation)
        world.emit(
            "legal",
            suit.defendant_id,
            "compensation_transfer",
            {"suit_id": suit.suit_id, "from": suit.defendant_id, "to": suit.plaintiff_id, "amount": verdict.compensation},
        )
    if verdict.penalty:
        world.adjust(suit.defendant_id, -verdict.penalty)
        world.flow("fines", -verdict.penalty)
        world.emit("legal", suit.defendant_id, "fine", {"suit_id": suit.suit_id, "payer": suit.defendant_id, "amount": verdict.penalty})
    lid = laborer_party(suit, world)
    if lid is not None:
        # the judgement covers every payroll settled so far (this turn's comes later)
        settled = world.contract_log[-1].turn if world.contract_log else 0
        for law_id in cited_law_ids(verdict.applicable_law, world.registry):
            world.compensated_until[(lid, law_id)] = settled
    return world


# --- legislation ---------------------------------------------------------


@dataclass
class LegislativeChange:
    action: str
    law_code: str
    justification: str = ""
    content: dict[str, Any] = field(default_factory=dict)
    corrupted: bool = False

    def validate(self, registry: LawRegistry) -> None:
        if self.action not in ("CREATE", "AMEND"):
            raise ChangeValidationError(f"unknown action {self.action!r}")
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_\-]*", self.law_code or ""):
            raise ChangeValidationError(f"bad law code {self.law_code!r}")
        if self.action == "AMEND" and self.law_code not in registry:
            raise ChangeValidationError(f"AMEND targets unknown law {self.law_code}")
        if self.action == "CREATE":
            if self.law_code in registry:
                raise ChangeValidationError(f"CREATE reuses existing id {self.law_code}")
            if not self.content.get("description"):
                raise ChangeValidationError("a new law needs a description")
        period = self.content.get("period")
        if period is not None and period not in PERIODS:
            raise ChangeValidationError(f"period {period!r} not in {PERIODS}")
        if self.action == "CREATE" and period is None and (self.content.get("penalty") or self.content.get("compensation")):
            raise ChangeValidationError("penalty/compensation without a period")
        if self.content.get("condition") is not None:
            try:
                Condition.from_dict(self.content["condition"])
            except (SchemaError, KeyError, TypeError, ValueError) as exc:
                raise ChangeValidationError(f"bad condition: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return {"action": self.action, "law_code": self.law_code, "justification": self.justification, "content": dict(self.content), "corrupted": self.corrupted}


_TIME_UNIT_RE = re.compile(r"\b(?:per|a|each|every|/)\s*(month|week)\b|\b(monthly|weekly)\b|/\s*(month|week|mo|wk)\b", re.I)
_ANNUAL_RE = re.compile(r"\b(?:per\s+year|annual(?:ly)?|yearly|/\s*year)\b", re.I)


def normalize_time_unit(value: Any, actions_per_month: int) -> tuple[Any, bool]:
    """Rewrite a monthly/weekly amount as a per-action-turn amount.

    Returns (new value, converted?).  Fixed amounts become numbers; for
    percentage phrases the factor is scaled.
    """
    if value is None or isinstance(value, (int, float)):
        return value, False
    text = str(value)
    m = _TIME_UNIT_RE.search(text)
    if not m:
        return value, False
    unit = next(g for g in m.groups() if g).lower()
    monthly = unit.startswith("mo")
    scale = 1 / actions_per_month if monthly else round(4 / actions_per_month)
    stripped = _TIME_UNIT_RE.sub("", text).strip(" ,.")
    expr = parse_money_expr(stripped)
    if expr is None or expr.kind == "text":
        return value, False
    if expr.kind == "fixed":
        return round(expr.amount * scale, 6), True
    return f"{expr.factor * scale * 100:g}% of {expr.base}", True


def classify_change(change: LegislativeChange, registry: LawRegistry) -> str:
    """'laborer' if the change protects laborers, 'company' if it restrains them."""
    text = f"{change.content.get('description', '')} {change.justification}".lower()
    cond = change.content.get("condition") or {}
    if cond.get("quantity") == "strike_turns" or re.search(r"\b(strik\w*|protest\w*|sabotag\w*|walk-?out)\b", text) and re.search(r"\blaborers?\b|\bworkers?\b", text) and not re.search(r"\bcompany (must|shall)\b", text):
        return "company"
    if change.action == "AMEND" and change.law_code in registry:
        old = registry.get(change.law_code)
        new_pen = parse_money_expr(change.content.get("penalty")) if "penalty" in change.content else old.penalty  # type: ignore[union-attr]
        if old.penalty and new_pen and old.penalty.kind == new_pen.kind == "fixed" and new_pen.amount < old.penalty.amount:  # type: ignore[union-attr]
            return "company"
        if old.penalty and new_pen and old.penalty.kind == new_pen.kind == "percent" and new_pen.factor < old.penalty.factor:  # type: ignore[union-attr]
            return "company"
    return "laborer"


def parse_legislation(text: str) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    doc = extract_json(text)
    changes = doc.get("changes", [])
    if not isinstance(changes, list):
        raise ParseError("'changes' must be a list")
    return doc.get("analysis_summary", {}), changes


def legislate(
    month_summary: Mapping[str, Any],
    registry: LawRegistry,
    backend: Any,
    legal_cfg: LegalConfig,
    *,
    actions_per_month: int,
    rng: random.Random,
    log: Any,
    turn: int = 0,
    prompt: str = "",
    temperature: float = 1.0,
    max_tokens: int = 2048,
) -> list[LegislativeChange]:
    """One legislative session; returns the changes actually enacted.

    ``log`` needs an ``emit(turn, phase, actor, kind, payload)`` method.
    """
    ctx = {"role": "legislator", "summary": month_summary, "registry": registry, "actions_per_month": actions_per_month, "bias": legal_cfg.bias}
    try:
        raw = backend.complete(prompt, temperature=temperature, max_tokens=max_tokens, context=ctx)
        analysis, proposals = parse_legislation(raw)
    except ParseError as exc:
        log.emit(turn, "legislation", "legislator", "anomaly", {"error": f"ParseError: {exc}"})
        return []
    except Exception as exc:
        log.emit(turn, "legislation", "legislator", "anomaly", {"error": f"{type(exc).__name__}: {exc}"})
        return []
    log.emit(turn, "legislation", "legislator", "legislative_analysis", {"analysis_summary": analysis, "n_proposed": len(proposals)})

    enacted = []
    for prop in proposals:
        try:
            if not isinstance(prop, Mapping):
                raise ChangeValidationError("change entry is not an object")
            change = LegislativeChange(
                action=str(prop.get("action", "")).upper(),
                law_code=str(prop.get("law_code", "")),
                justification=str(prop.get("justification", "")),
                content=dict(prop.get("content") or {}),
            )
            for key in ("penalty", "compensation"):
                if key in change.content:
                    new, converted = normalize_time_unit(change.content[key], actions_per_month)
                    if converted:
                        change.content[key] = new
                        change.content["period"] = "per_action_turn"
                    elif isinstance(change.content[key], str) and _ANNUAL_RE.search(change.content[key]):
                        raise ChangeValidationError(f"annual {key} is not allowed")
            change.validate(registry)
        except ChangeValidationError as exc:
            log.emit(turn, "legislation", "legislator", "anomaly", {"error": f"ChangeValidationError: {exc}", "change": dict(prop) if isinstance(prop, Mapping) else prop})
            continue
        if classify_change(change, registry) == "laborer" and legal_cfg.corruption_probability > 0:
            if rng.random() < legal_cfg.corruption_probability:
                change.corrupted = True
                log.emit(turn, "legislation", "legislator", "legislation_blocked", {**change.to_dict()})
                continue
        law = registry.apply(change, turn)
        enacted.append(change)
        log.emit(turn, "legislation", "legislator", "law_enacted", {**change.to_dict(), "version": law.version, "registry_revision": registry.revision})
    return enacted


def month_summary(world: Any, month: int) -> dict[str, Any]:
    """Structured digest of the month's suits for the legislator."""
    turns = range((month - 1) * world.config.NUM_ACTIONS_PER_MONTH + 1, month * world.config.NUM_ACTIONS_PER_MONTH + 1)
    rows = []
    counts: dict[str, int] = {}
    for suit in world.suits:
        if suit.filed_turn not in turns:
            continue
        v = world.verdicts.get(suit.suit_id)
        row = {
            "suit_id": suit.suit_id,
            "plaintiff": suit.plaintiff_id,
            "defendant": suit.defendant_id,
            "reason": suit.reason,
            "verdict": v.verdict if v else "pending",
            "applicable_law": v.applicable_law if v else None,
            "penalty": v.penalty if v else 0.0,
            "compensation": v.compensation if v else 0.0,
        }
        rows.append(row)
        if v and v.guilty:
            for law_id in cited_law_ids(v.applicable_law, world.registry):
                counts[law_id] = counts.get(law_id, 0) + 1
    return {
        "month": month,
        "lawsuits": rows,
        "guilty_counts": counts,
        "not_guilty_count": sum(1 for r in rows if r["verdict"] == "not_guilty"),
    }
