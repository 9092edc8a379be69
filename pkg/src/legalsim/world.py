"""State of the company-vs-laborers world: clock, contracts, cash, welfare."""

from __future__ import annotations

import json
import random
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Iterator, Mapping

from .errors import ConfigError

def _default_impact_table() -> dict[str, float]:
    raw = json.loads((resources.files("legalsim.data.texts") / "gm_impact_table.json").read_text("utf-8"))
    return {k.lower(): float(v) for k, v in raw.items()}


DEFAULT_IMPACT_TABLE = _default_impact_table()


@dataclass(frozen=True)
class MicroConfig:
    """Run constants.  Upper-case names match the keys of the config file."""

    NUM_LABORERS: int = 3
    SIMULATION_MONTHS: int = 4
    NUM_ACTIONS_PER_MONTH: int = 2
    KNOW_ARRANGEMENT: bool = True
    INITIAL_HOURLY_WAGE: float = 30.0
    SAFETY_INVESTIMENT_INPUT: float = 500.0
    NORMAL_WORK_HOURS_PER_WEEK: float = 40.0
    COMPANY_INITIAL_CAPITAL: float = 100000.0
    LABORER_INITIAL_CASH: float = 2000.0
    LABORER_LIVING_COST: float = 1500.0
    # not fixed by the source experiments; exposed so runs can report them
    REVENUE_PER_LABOR_HOUR: float = 60.0
    OVERTIME_MULTIPLIER: float = 1.5
    COMPANY_NAME: str = "Northfield Works"
    GM_IMPACT_TABLE: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_IMPACT_TABLE))
    AGENT_TEMPERATURE: float = 1.0
    AGENT_MAX_TOKENS: int = 1024

    def __post_init__(self) -> None:
        if self.NUM_LABORERS < 1:
            raise ConfigError("NUM_LABORERS must be >= 1")
        if self.SIMULATION_MONTHS < 1 or self.NUM_ACTIONS_PER_MONTH < 1:
            raise ConfigError("SIMULATION_MONTHS and NUM_ACTIONS_PER_MONTH must be >= 1")
        for name in ("INITIAL_HOURLY_WAGE", "SAFETY_INVESTIMENT_INPUT", "NORMAL_WORK_HOURS_PER_WEEK", "LABORER_LIVING_COST"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def weeks_per_turn(self) -> float:
        return 4 / self.NUM_ACTIONS_PER_MONTH

    @property
    def total_turns(self) -> int:
        return self.SIMULATION_MONTHS * self.NUM_ACTIONS_PER_MONTH

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, Any] | None) -> "MicroConfig":
        overrides = dict(overrides or {})
        names = {f.name for f in fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "GM_IMPACT_TABLE" in overrides:
            overrides["GM_IMPACT_TABLE"] = {str(k).lower(): float(v) for k, v in overrides["GM_IMPACT_TABLE"].items()}
        return cls(**overrides)

    @classmethod
    def from_file(cls, path: str | Path) -> "MicroConfig":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["GM_IMPACT_TABLE"] = dict(self.GM_IMPACT_TABLE)
        return d


@dataclass
class SimClock:
    months: int
    actions_per_month: int
    month_index: int = 1
    action_turn_in_month: int = 1

    @property
    def global_turn(self) -> int:
        return (self.month_index - 1) * self.actions_per_month + self.action_turn_in_month

    @property
    def weeks_per_turn(self) -> float:
        return 4 / self.actions_per_month

    @property
    def finished(self) -> bool:
        return self.month_index > self.months

    @property
    def at_month_end(self) -> bool:
        return self.action_turn_in_month == self.actions_per_month

    def advance(self) -> None:
        if self.action_turn_in_month < self.actions_per_month:
            self.action_turn_in_month += 1
        else:
            self.action_turn_in_month = 1
            self.month_index += 1


# --- agents ---------------------------------------------------------------

OCCUPATIONS = (
    "Assembly Line Operator",
    "Packager",
    "Warehouse Keeper",
    "Forklift Driver",
    "Mechanic",
    "Welder",
    "Machine Operator",
    "Quality Inspector",
)
PERSONALITIES = ("Introverted", "Extroverted", "Ambiverted")
RISK_TOLERANCES = ("risk-averse", "risk-neutral", "risk-seeking")
BEHAVIOURS = ("aggressive", "conciliatory", "passive", "opportunistic")
PATIENCE = ("short-tempered", "patient")
PERCEPTIONS = ("neutral", "positive", "negative")


@dataclass(frozen=True)
class Persona:
    age: int
    gender: str
    occupation: str
    personality: str
    risk_tolerance: str
    behavioral_tendency: str
    patience: str

    def describe(self, company_id: str) -> str:
        article = "an" if self.occupation[0].lower() in "aeiou" else "a"
        return (
            f"You are a {self.age}-year-old {self.gender.lower()}, currently employed as "
            f"{article} {self.occupation} at the company `{company_id}`. "
            f"Your personality is {self.personality.lower()}, you are {self.risk_tolerance}, "
            f"your behavioral tendency is {self.behavioral_tendency}, and you are {self.patience}."
        )


def random_persona(rng: random.Random) -> Persona:
    return Persona(
        age=rng.randint(18, 45),
        gender="Male" if rng.random() < 0.65 else "Female",
        occupation=rng.choice(OCCUPATIONS),
        personality=rng.choice(PERSONALITIES),
        risk_tolerance=rng.choice(RISK_TOLERANCES),
        behavioral_tendency=rng.choice(BEHAVIOURS),
        patience=rng.choice(PATIENCE),
    )


@dataclass
class LaborerState:
    laborer_id: str
    cash: float
    living_cost: float
    hourly_wage: float
    weekly_hours: float
    overtime_multiplier: float
    overtime_arrangement: str
    persona: Persona
    hired: bool = True
    perception_of_law: str = "neutral"
    welfare_history: list[float] = field(default_factory=list)
    absent_this_turn: bool = False
    last_action: str = "None yet."
    bankrupt: bool = False

    def contract(self) -> dict[str, Any]:
        return {
            "hourly_wage": self.hourly_wage,
            "weekly_hours": self.weekly_hours,
            "overtime_multiplier": self.overtime_multiplier,
            "overtime_arrangement": self.overtime_arrangement,
        }


@dataclass
class CompanyState:
    company_id: str
    capital: float
    safety_investment: float
    revenue_per_labor_hour: float
    num_employees: int = 0
    base_profit: float = 0.0
    last_action: str = "None yet."
    bankrupt: bool = False


def overtime_text(multiplier: float) -> str:
    return f"Hours beyond the standard week are paid at {multiplier:g}x the hourly wage."


@dataclass
class ActionIntent:
    actor_id: str
    turn: int
    think: str
    action: str
    is_lawsuit: bool = False
    lawsuit_reason: str = ""
    lawsuit_targets: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.action.strip():
            raise ValueError("action must be non-empty")


_TAG_RE = {tag: re.compile(rf"<{tag}>(.*?)(?:</{tag}>|$)", re.S | re.I) for tag in ("think", "action")}


def parse_action_response(text: str) -> tuple[str, str]:
    """(think, action) from a ``<response><think/><action/></response>`` reply.

    Without an ``<action>`` tag the last non-empty line is taken as the action.
    """
    think_m = _TAG_RE["think"].search(text)
    action_m = _TAG_RE["action"].search(text)
    think = think_m.group(1).strip() if think_m else ""
    if action_m:
        action = action_m.group(1)
    else:
        lines = [l for l in re.sub(r"</?\w+>", "", text).splitlines() if l.strip()]
        action = lines[-1] if lines else ""
    action = re.sub(r"</?\w+>", "", action)
    return think, " ".join(action.split())


# --- welfare ---------------------------------------------------------------

WELFARE_WEIGHTS = {"safety": 0.15, "wage": 0.85 / 3, "hours": 0.85 / 3, "cash": 0.85 / 3}
WAGE_RANGE = (0.0, 60.0)
SAFETY_RANGE = (0.0, 600.0)
HOURS_RANGE = (20.0, 168.0)
CASH_RANGE = (0.0, 1500.0 * 12)


def _norm(x: float, lo: float, hi: float) -> float:
    x = max(lo, min(x, hi))
    if hi - lo == 0:
        return 0.0
    return (x - lo) / (hi - lo)


def compute_welfare(cash: float, total_hours: float, avg_hourly_wage: float, safety_investment: float) -> float:
    """Welfare index on a 0-100 scale (higher is better; hours count against)."""
    score = (
        WELFARE_WEIGHTS["safety"] * _norm(safety_investment, *SAFETY_RANGE)
        + WELFARE_WEIGHTS["wage"] * _norm(avg_hourly_wage, *WAGE_RANGE)
        + WELFARE_WEIGHTS["hours"] * (1.0 - _norm(total_hours, *HOURS_RANGE))
        + WELFARE_WEIGHTS["cash"] * _norm(cash, *CASH_RANGE)
    )
    return 100.0 * score


# --- event log ------------------------------------------------------------


class EventLog:
    """Append-only list of ``{turn, phase, actor, kind, payload}`` records."""

    def __init__(self) -> None:
        self.events: list[dict[str, Any]] = []

    def emit(self, turn: int, phase: str, actor: str, kind: str, payload: Mapping[str, Any] | None = None) -> dict[str, Any]:
        ev = {"turn": turn, "phase": phase, "actor": actor, "kind": kind, "payload": dict(payload or {})}
        self.events.append(ev)
        return ev

    def __iter__(self) -> Iterator[dict[str, Any]]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def of_kind(self, kind: str) -> list[dict[str, Any]]:
        return [e for e in self.events if e["kind"] == kind]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, ensure_ascii=False) + "\n" for e in self.events)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def read_events(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --- world ------------------------------------------------------------------


@dataclass
class ContractEntry:
    """What one laborer's terms and work looked like in one turn."""

    turn: int
    laborer_id: str
    hourly_wage: float
    weekly_hours: float
    overtime_multiplier: float
    safety_investment: float
    hours_worked: float
    overtime_hours_worked: float
    absent: bool
    not_working_rule: str | None = None


@dataclass
class MicroWorldState:
    config: MicroConfig
    clock: SimClock
    company: CompanyState
    laborers: dict[str, LaborerState]
    registry: Any  # legal.LawRegistry
    legal_cfg: Any  # legal.LegalConfig
    rng: random.Random
    events: EventLog = field(default_factory=EventLog)
    preset_id: str = "pre_legal"
    contract_log: list[ContractEntry] = field(default_factory=list)
    suits: list[Any] = field(default_factory=list)
    verdicts: dict[str, Any] = field(default_factory=dict)
    pending_suits: list[tuple[str, str, str]] = field(default_factory=list)
    welfare_rows: list[dict[str, Any]] = field(default_factory=list)
    turn_flows: dict[str, float] = field(default_factory=dict)
    last_turn_profit: float = 0.0
    perception_text: str = ""
    compensated_until: dict[tuple[str, str], int] = field(default_factory=dict)
    turn_rules: dict[str, str] = field(default_factory=dict)

    @property
    def turn(self) -> int:
        return self.clock.global_turn

    def emit(self, phase: str, actor: str, kind: str, payload: Mapping[str, Any] | None = None) -> dict[str, Any]:
        return self.events.emit(self.turn, phase, actor, kind, payload)

    def flow(self, name: str, amount: float) -> None:
        """Record money entering (+) or leaving (-) the company/laborer system."""
        self.turn_flows[name] = self.turn_flows.get(name, 0.0) + amount

    def hired_ids(self) -> list[str]:
        return [lid for lid, lab in self.laborers.items() if lab.hired]

    def is_laborer(self, agent_id: str) -> bool:
        return agent_id in self.laborers

    def balance(self, agent_id: str) -> float:
        if agent_id == self.company.company_id:
            return self.company.capital
        return self.laborers[agent_id].cash

    def adjust(self, agent_id: str, amount: float) -> None:
        if agent_id == self.company.company_id:
            self.company.capital += amount
            if self.company.capital < 0 and not self.company.bankrupt:
                self.company.bankrupt = True
                self.emit("accounting", agent_id, "bankruptcy", {"capital": self.company.capital})
        else:
            lab = self.laborers[agent_id]
            lab.cash += amount
            if lab.cash < 0 and not lab.bankrupt:
                lab.bankrupt = True
                self.emit("accounting", agent_id, "bankruptcy", {"cash": lab.cash})

    def total_money(self) -> float:
        return self.company.capital + sum(l.cash for l in self.laborers.values())

    def welfare_of(self, lab: LaborerState) -> float:
        return compute_welfare(lab.cash, lab.weekly_hours, lab.hourly_wage, self.company.safety_investment)

    def sync_employees(self) -> None:
        self.company.num_employees = len(self.hired_ids())
        self.company.base_profit = self.expected_monthly_profit()

    def expected_monthly_profit(self) -> float:
        """Monthly profit at current terms if everyone works (shown to the company)."""
        cfg = self.config
        profit = -self.company.safety_investment
        for lab in self.laborers.values():
            if not lab.hired:
                continue
            hours = lab.weekly_hours * 4
            regular = min(hours, cfg.NORMAL_WORK_HOURS_PER_WEEK * 4)
            pay = lab.hourly_wage * regular + lab.hourly_wage * lab.overtime_multiplier * (hours - regular)
            profit += self.company.revenue_per_labor_hour * hours - pay
        return profit


def init_world(config: MicroConfig, preset: Any, seed: int = 0) -> MicroWorldState:
    """Fresh world for one trial under ``preset`` (a ``presets.ExperimentPreset``)."""
    from .legal import LawRegistry

    rng = random.Random(seed)
    company = CompanyState(
        company_id=config.COMPANY_NAME,
        capital=config.COMPANY_INITIAL_CAPITAL,
        safety_investment=config.SAFETY_INVESTIMENT_INPUT,
        revenue_per_labor_hour=config.REVENUE_PER_LABOR_HOUR,
    )
    laborers = {}
    for i in range(1, config.NUM_LABORERS + 1):
        lid = f"Laborer-{i}"
        laborers[lid] = LaborerState(
            laborer_id=lid,
            cash=config.LABORER_INITIAL_CASH,
            living_cost=config.LABORER_LIVING_COST,
            hourly_wage=config.INITIAL_HOURLY_WAGE,
            weekly_hours=config.NORMAL_WORK_HOURS_PER_WEEK,
            overtime_multiplier=config.OVERTIME_MULTIPLIER,
            overtime_arrangement=overtime_text(config.OVERTIME_MULTIPLIER),
            persona=random_persona(rng),
            perception_of_law=preset.perception,
        )
    registry = LawRegistry.from_laws(preset.initial_laws())
    world = MicroWorldState(
        config=config,
        clock=SimClock(config.SIMULATION_MONTHS, config.NUM_ACTIONS_PER_MONTH),
        company=company,
        laborers=laborers,
        registry=registry,
        legal_cfg=preset.legal_config(config),
        # legal randomness (corruption) gets its own stream so agent count does not shift it
        rng=random.Random(f"legal:{seed}"),
        preset_id=preset.preset_id,
        perception_text=preset.perception_text(),
    )
    world.sync_employees()
    world.events.emit(
        0,
        "init",
        "world",
        "world_initialized",
        {
            "preset": preset.preset_id,
            "seed": seed,
            "company": asdict(company),
            "laborers": {lid: {"persona": asdict(l.persona), **l.contract(), "cash": l.cash} for lid, l in laborers.items()},
            "laws": registry.to_json(),
            "legal_config": asdict(world.legal_cfg),
        },
    )
    for lab in laborers.values():
        w = world.welfare_of(lab)
        lab.welfare_history.append(w)
        world.welfare_rows.append(_welfare_row(0, lab, w, company.safety_investment))
    return world


def _welfare_row(turn: int, lab: LaborerState, welfare: float, safety: float) -> dict[str, Any]:
    return {
        "turn": turn,
        "laborer_id": lab.laborer_id,
        "welfare": welfare,
        "cash": lab.cash,
        "wage": lab.hourly_wage,
        "hours": lab.weekly_hours,
        "safety": safety,
    }


def apply_payroll(world: MicroWorldState) -> MicroWorldState:
    """Settle one action turn: wages, living costs, revenue, safety spend."""
    cfg = world.config
    weeks = cfg.weeks_per_turn
    standard_hours = cfg.NORMAL_WORK_HOURS_PER_WEEK * weeks
    company = world.company
    total_pay = 0.0
    hours_worked_total = 0.0

    for lab in world.laborers.values():
        pay = 0.0
        worked = overtime = 0.0
        if lab.hired and not lab.absent_this_turn:
            worked = lab.weekly_hours * weeks
            regular = min(worked, standard_hours)
            overtime = worked - regular
            pay = lab.hourly_wage * regular + lab.hourly_wage * lab.overtime_multiplier * overtime
        living = lab.living_cost / cfg.NUM_ACTIONS_PER_MONTH
        lab.cash += pay
        world.adjust(lab.laborer_id, -living)
        world.flow("living_costs", -living)
        total_pay += pay
        hours_worked_total += worked
        world.contract_log.append(
            ContractEntry(
                turn=world.turn,
                laborer_id=lab.laborer_id,
                hourly_wage=lab.hourly_wage,
                weekly_hours=lab.weekly_hours,
                overtime_multiplier=lab.overtime_multiplier,
                safety_investment=company.safety_investment,
                hours_worked=worked,
                overtime_hours_worked=overtime,
                absent=lab.absent_this_turn or not lab.hired,
                not_working_rule=world.turn_rules.get(lab.laborer_id) if lab.absent_this_turn else None,
            )
        )
        world.emit(
            "payroll",
            lab.laborer_id,
            "wage_paid",
            {"hours_worked": worked, "overtime_hours": overtime, "pay": pay, "living_cost": living, "absent": lab.absent_this_turn, "hired": lab.hired},
        )

    revenue = company.revenue_per_labor_hour * hours_worked_total
    safety = company.safety_investment / cfg.NUM_ACTIONS_PER_MONTH if world.hired_ids() else 0.0
    world.adjust(company.company_id, revenue - total_pay - safety)
    world.flow("revenue", revenue)
    world.flow("safety_spend", -safety)
    world.last_turn_profit = revenue - total_pay - safety
    world.emit(
        "payroll",
        company.company_id,
        "company_settlement",
        {"revenue": revenue, "total_pay": total_pay, "safety_spend": safety, "profit": world.last_turn_profit, "capital": company.capital},
    )
    world.sync_employees()
    return world


def snapshot_welfare(world: MicroWorldState) -> None:
    for lab in world.laborers.values():
        w = world.welfare_of(lab)
        lab.welfare_history.append(w)
        row = _welfare_row(world.turn, lab, w, world.company.safety_investment)
        world.welfare_rows.append(row)
        world.emit("welfare", lab.laborer_id, "welfare_snapshot", row)
