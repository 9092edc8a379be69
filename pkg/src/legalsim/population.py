"""Country statistics and hierarchical sampling of synthetic agents.

Each agent is drawn attribute by attribute, with the conditional structure
the macro experiments rely on: income depends on education and gender,
drug use on gender and age band, gang exposure on gender.  All draws come
from a single ``random.Random`` stream, so a seed fully determines a
population.
"""

from __future__ import annotations

import bisect
import io
import json
import math
import random
from dataclasses import asdict, dataclass
from importlib import resources
from itertools import accumulate
from pathlib import Path
from typing import IO, Any, Iterable, Sequence

from .errors import DistributionError, MissingEducationIncome, SchemaError

EDUCATION_LEVELS = (
    "below_upper_secondary",
    "upper_secondary",
    "tertiary_bachelor",
    "tertiary_master_or_above",
    "tertiary_other",
)
GENDERS = ("male", "female")

MIN_AGE = 18
MAX_AGE = 65
MALE_SHARE = 0.51

# income: male premium and the population normaliser
MALE_INCOME_PREMIUM = 1.2
INCOME_NORMALISER = 1.102
INCOME_LOG_VARIANCE = 0.25

# drug use multipliers by (gender, age <= 25)
YOUTH_AGE_CUTOFF = 25
DRUG_MULTIPLIERS = {
    ("female", True): 1.75,
    ("female", False): 1.0,
    ("male", True): 2.275,
    ("male", False): 1.3,
}
DRUG_NORMALISER = 1.3225

GANG_NORMALISER = 1.25
GANG_MALE_RATIO = 1.5

# tolerance under which a distribution is silently renormalised
RENORMALISE_TOLERANCE = 1e-6

REQUIRED_FIELDS = (
    "country_id",
    "education_dist",
    "gini",
    "median_income_ppp",
    "income_by_education",
    "unemployment_benefit_monthly",
    "employment_rate",
    "drug_use_rate",
    "gang_influence_rate",
    "community_safety_index",
    "firearm_policy",
    "religion_dist",
    "immigrant_rate",
    "society_background",
)


@dataclass(frozen=True)
class CountryStats:
    country_id: str
    education_dist: dict[str, float]
    gini: float
    median_income_ppp: float
    income_by_education: dict[str, float]
    unemployment_benefit_monthly: float
    employment_rate: float
    drug_use_rate: float
    gang_influence_rate: float
    community_safety_index: float
    firearm_policy: str
    religion_dist: dict[str, float]
    immigrant_rate: float | str
    society_background: str

    @property
    def numeric_immigrant_rate(self) -> float:
        """Immigrant rate as a probability; the "low" sentinel samples as 0."""
        if isinstance(self.immigrant_rate, str):
            return 0.0
        return float(self.immigrant_rate)

    @property
    def unemployed_income(self) -> float:
        return 12 * self.unemployment_benefit_monthly

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    include_religion: bool = True
    include_immigrant: bool = False
    country_visible: bool = False
    include_society_context: bool = False
    population_size: int = 10_000

    def __post_init__(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")


@dataclass(frozen=True)
class AgentProfile:
    agent_id: int
    age: int
    gender: str
    education: str
    religion: str
    employed: bool
    income_ppp: float
    drug_use: bool
    gang_exposed: bool
    immigrant: bool
    country_id: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AgentProfile":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def _check_probability(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{name} must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} is outside [0, 1]")
    return float(value)


def _check_distribution(name: str, dist: Any) -> dict[str, float]:
    if not isinstance(dist, dict) or not dist:
        raise SchemaError(f"{name} must be a non-empty object")
    probs = {str(k): _check_probability(f"{name}[{k}]", v) for k, v in dist.items()}
    total = sum(probs.values())
    drift = abs(total - 1.0)
    if drift > RENORMALISE_TOLERANCE:
        raise DistributionError(f"{name} sums to {total:.9f}, not 1")
    if drift > 0.0:
        probs = {k: v / total for k, v in probs.items()}
    return probs


def _check_positive(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{name} must be a number, got {value!r}")
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return float(value)


def parse_country_stats(doc: dict[str, Any]) -> CountryStats:
    missing = [k for k in REQUIRED_FIELDS if k not in doc]
    if missing:
        raise SchemaError(f"country statistics missing fields: {', '.join(missing)}")

    education = _check_distribution("education_dist", doc["education_dist"])
    unknown = set(education) - set(EDUCATION_LEVELS)
    if unknown:
        raise SchemaError(f"unknown education levels: {sorted(unknown)}")

    income = doc["income_by_education"]
    if not isinstance(income, dict):
        raise SchemaError("income_by_education must be an object")
    income = {str(k): _check_positive(f"income_by_education[{k}]", v) for k, v in income.items()}

    immigrant = doc["immigrant_rate"]
    if isinstance(immigrant, str):
        if immigrant.strip().lower() != "low":
            raise SchemaError(f"immigrant_rate must be a probability or 'low', got {immigrant!r}")
        immigrant = "low"
    else:
        immigrant = _check_probability("immigrant_rate", immigrant)

    return CountryStats(
        country_id=str(doc["country_id"]),
        education_dist=education,
        gini=_check_probability("gini", doc["gini"]),
        median_income_ppp=_check_positive("median_income_ppp", doc["median_income_ppp"]),
        income_by_education=income,
        unemployment_benefit_monthly=_check_positive(
            "unemployment_benefit_monthly", doc["unemployment_benefit_monthly"]
        ),
        employment_rate=_check_probability("employment_rate", doc["employment_rate"]),
        drug_use_rate=_check_probability("drug_use_rate", doc["drug_use_rate"]),
        gang_influence_rate=_check_probability("gang_influence_rate", doc["gang_influence_rate"]),
        community_safety_index=float(doc["community_safety_index"]),
        firearm_policy=str(doc["firearm_policy"]),
        religion_dist=_check_distribution("religion_dist", doc["religion_dist"]),
        immigrant_rate=immigrant,
        society_background=str(doc["society_background"]),
    )


def load_country_stats(source: IO[bytes] | IO[str] | bytes | str) -> CountryStats:
    """Parse and validate a country-statistics JSON document.

    ``source`` may be an open binary or text stream, or the raw document.
    """
    if isinstance(source, (bytes, str)):
        raw = source
    else:
        raw = source.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"country statistics are not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("country statistics must be a JSON object")
    return parse_country_stats(doc)


def builtin_country_ids() -> list[str]:
    files = resources.files("legalsim.data.countries").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def builtin_country_path(country_id: str) -> Path:
    path = resources.files("legalsim.data.countries") / f"{country_id}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no built-in statistics for country {country_id!r}")
    return Path(str(path))


def load_country(country: str | Path) -> CountryStats:
    """Load a built-in country by id (``"A"``..``"D"``) or a JSON file by path."""
    path = Path(country)
    if not path.is_file():
        path = builtin_country_path(str(country))
    with open(path, "rb") as fh:
        return load_country_stats(fh)


# --- samplers -------------------------------------------------------------


def income_location(country: CountryStats, education: str, gender: str) -> float:
    """Median of the income distribution for one (education, gender) cell."""
    try:
        base = country.income_by_education[education]
    except KeyError:
        raise MissingEducationIncome(education) from None
    if gender == "male":
        return MALE_INCOME_PREMIUM * base / INCOME_NORMALISER
    return base / INCOME_NORMALISER


def sample_income(country: CountryStats, education: str, gender: str, rng: random.Random) -> float:
    mu_adj = income_location(country, education, gender)
    return rng.lognormvariate(math.log(mu_adj), math.sqrt(INCOME_LOG_VARIANCE))


def drug_use_rate(country: CountryStats, gender: str, age: int) -> float:
    m = DRUG_MULTIPLIERS[(gender, age <= YOUTH_AGE_CUTOFF)]
    return min(1.0, max(0.0, m * country.drug_use_rate / DRUG_NORMALISER))


def sample_drug_use(country: CountryStats, gender: str, age: int, rng: random.Random) -> bool:
    if not MIN_AGE <= age <= MAX_AGE:
        raise ValueError(f"age {age} outside [{MIN_AGE}, {MAX_AGE}]")
    return rng.random() < drug_use_rate(country, gender, age)


def gang_rate(country: CountryStats, gender: str) -> float:
    female = country.gang_influence_rate / GANG_NORMALISER
    rate = female if gender == "female" else GANG_MALE_RATIO * female
    return min(1.0, max(0.0, rate))


def sample_gang_influence(country: CountryStats, gender: str, rng: random.Random) -> bool:
    return rng.random() < gang_rate(country, gender)


class _Categorical:
    __slots__ = ("labels", "cum")

    def __init__(self, dist: dict[str, float]):
        self.labels = list(dist)
        self.cum = list(accumulate(dist.values()))

    def draw(self, rng: random.Random) -> str:
        u = rng.random() * self.cum[-1]
        i = bisect.bisect_right(self.cum, u)
        return self.labels[min(i, len(self.labels) - 1)]


@dataclass
class _Tables:
    education: _Categorical
    religion: _Categorical


_table_cache: dict[int, tuple[CountryStats, _Tables]] = {}


def _tables(country: CountryStats) -> _Tables:
    hit = _table_cache.get(id(country))
    if hit is not None and hit[0] is country:
        return hit[1]
    t = _Tables(_Categorical(country.education_dist), _Categorical(country.religion_dist))
    _table_cache[id(country)] = (country, t)
    return t


def generate_profile(
    country: CountryStats,
    cfg: SamplingConfig,
    rng: random.Random,
    agent_id: int = 0,
) -> AgentProfile:
    """Draw one agent.

    The number of draws per agent does not depend on the config flags, so
    toggling ``include_religion`` or ``include_immigrant`` leaves every
    other attribute of a seeded population unchanged.
    """
    tables = _tables(country)
    age = rng.randint(MIN_AGE, MAX_AGE)
    gender = "male" if rng.random() < MALE_SHARE else "female"
    education = tables.education.draw(rng)
    religion = tables.religion.draw(rng)
    drug_use = sample_drug_use(country, gender, age, rng)
    gang = sample_gang_influence(country, gender, rng)
    employed = rng.random() < country.employment_rate
    if employed:
        income = sample_income(country, education, gender, rng)
    else:
        income = country.unemployed_income
    immigrant = rng.random() < country.numeric_immigrant_rate and cfg.include_immigrant
    return AgentProfile(
        agent_id=agent_id,
        age=age,
        gender=gender,
        education=education,
        religion=religion,
        employed=employed,
        income_ppp=income,
        drug_use=drug_use,
        gang_exposed=gang,
        immigrant=immigrant,
        country_id=country.country_id,
    )


def generate_population(
    country: CountryStats,
    cfg: SamplingConfig,
    rng: random.Random | None = None,
) -> list[AgentProfile]:
    if cfg.population_size < 1:
        raise ValueError("population_size must be >= 1")
    if rng is None:
        rng = random.Random(cfg.seed)
    return [generate_profile(country, cfg, rng, agent_id=i) for i in range(cfg.population_size)]


def dumps_population(population: Iterable[AgentProfile]) -> str:
    buf = io.StringIO()
    for p in population:
        buf.write(json.dumps(p.to_dict(), sort_keys=False))
        buf.write("\n")
    return buf.getvalue()


def write_population(population: Iterable[AgentProfile], path: str | Path) -> None:
    Path(path).write_text(dumps_population(population), encoding="utf-8")


def read_population(path: str | Path) -> list[AgentProfile]:
    with open(path, encoding="utf-8") as fh:
        return [AgentProfile.from_dict(json.loads(line)) for line in fh if line.strip()]


__all__: Sequence[str] = (
    "AgentProfile",
    "CountryStats",
    "EDUCATION_LEVELS",
    "SamplingConfig",
    "builtin_country_ids",
    "drug_use_rate",
    "gang_rate",
    "generate_population",
    "generate_profile",
    "income_location",
    "load_country",
    "load_country_stats",
    "read_population",
    "sample_drug_use",
    "sample_gang_influence",
    "sample_income",
    "write_population",
)
