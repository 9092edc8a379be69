"""Decision scenes, agent self-descriptions, and decision prompts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import (
    MissingPunishmentText,
    SchemaError,
    UnknownEducationLabel,
    UnknownReligionLabel,
)
from .population import AgentProfile, CountryStats, SamplingConfig, load_country

PUNISHMENT_LEVELS = tuple(range(6))
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

EDUCATION_PHRASES = {
    "below_upper_secondary": "less than high school education",
    "upper_secondary": "completed high school or vocational training",
    "tertiary_bachelor": "a bachelor's degree",
    "tertiary_master_or_above": "a master's degree or higher",
    "tertiary_other": "some form of tertiary education",
}

RELIGION_PHRASES = {
    "christianity": "Christian",
    "islam": "Muslim",
    "hinduism": "Hindu",
    "buddhism": "Buddhist",
    "sikhism": "Sikh",
    "jainism": "Jain",
    "judaism": "Jewish",
    "folk_or_chinese_folk_religion": "follower of Chinese folk religion",
    "unaffiliated": "non-religious/unaffiliated",
    "other": "of other religious beliefs",
    "other_or_none": "of other religious beliefs or non-religious",
}

DEFAULT_PROMPT_TEMPLATE = """You are a character simulation system. Simulate the final decision of a person based on the profile below.

{profile}

Scene: {scene}

{punishment_context}

Choose the most likely behavior:

{options}

Answer by outputting ONLY the letter of the selected option (e.g., A, B, or C). Do NOT write any explanation.

Example:
Answer: B

Your answer:
Answer:"""

PLACEHOLDERS = ("profile", "scene", "punishment_context", "options")
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


@dataclass(frozen=True)
class Option:
    text: str
    legality: str  # "legal" | "illegal"

    @property
    def illegal(self) -> bool:
        return self.legality == "illegal"


@dataclass(frozen=True)
class Scene:
    scene_id: str
    description: str
    options: tuple[Option, ...]
    punishment_texts: dict[int, str] = field(default_factory=dict)
    punishment_subject: str = ""
    title: str = ""

    def __post_init__(self) -> None:
        if not 2 <= len(self.options) <= 4:
            raise SchemaError(f"scene {self.scene_id!r} must have 2-4 options")
        for opt in self.options:
            if opt.legality not in ("legal", "illegal"):
                raise SchemaError(f"option legality must be legal/illegal, got {opt.legality!r}")
        if not any(o.illegal for o in self.options):
            raise SchemaError(f"scene {self.scene_id!r} has no illegal option")
        if self.punishment_texts and set(self.punishment_texts) != set(PUNISHMENT_LEVELS):
            raise SchemaError(f"scene {self.scene_id!r} must define punishment levels 0..5")

    @property
    def illegal_indices(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.options) if o.illegal)

    @property
    def legal_indices(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.options) if not o.illegal)

    @property
    def illegal_option_index(self) -> int:
        return self.illegal_indices[0]

    def is_crime(self, option_index: int) -> bool:
        return self.options[option_index].illegal

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "title": self.title,
            "description": self.description,
            "options": [{"text": o.text, "legality": o.legality} for o in self.options],
            "punishment_subject": self.punishment_subject,
            "punishment_texts": {str(k): v for k, v in sorted(self.punishment_texts.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Scene":
        for key in ("scene_id", "description", "options"):
            if key not in doc:
                raise SchemaError(f"scene missing field {key!r}")
        try:
            options = tuple(Option(str(o["text"]), str(o["legality"])) for o in doc["options"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed scene options: {exc}") from exc
        texts = {int(k): str(v) for k, v in doc.get("punishment_texts", {}).items()}
        return cls(
            scene_id=str(doc["scene_id"]),
            description=str(doc["description"]),
            options=options,
            punishment_texts=texts,
            punishment_subject=str(doc.get("punishment_subject", "")),
            title=str(doc.get("title", "")),
        )


def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return Scene.from_dict(json.load(fh))


def builtin_scenes() -> list[Scene]:
    """The three default scenes: theft, assault, sex trade."""
    root = resources.files("legalsim.data.scenes")
    order = ("theft", "assault", "sex_trade")
    return [Scene.from_dict(json.loads((root / f"{sid}.json").read_text("utf-8"))) for sid in order]


def get_scene(scene: str | Path) -> Scene:
    """Resolve a built-in scene id or a scene JSON file."""
    for s in builtin_scenes():
        if s.scene_id == str(scene):
            return s
    path = Path(scene)
    if path.is_file():
        return load_scene(path)
    raise KeyError(f"unknown scene {scene!r}")


@dataclass(frozen=True)
class PromptRenderConfig:
    include_punishment_impression: bool = False
    punishment_level: int | None = None
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE

    def __post_init__(self) -> None:
        if self.include_punishment_impression and self.punishment_level is None:
            raise ValueError("punishment_level is required when punishment impressions are on")
        if self.punishment_level is not None and self.punishment_level not in PUNISHMENT_LEVELS:
            raise ValueError(f"punishment_level must be in 0..5, got {self.punishment_level}")


def describe_self(profile: AgentProfile, cfg: SamplingConfig, country: CountryStats | None = None) -> str:
    try:
        education = EDUCATION_PHRASES[profile.education]
    except KeyError:
        raise UnknownEducationLabel(profile.education) from None

    status = "employed" if profile.employed else "unemployed"
    paragraphs = [
        f"I am a {profile.age}-year-old {profile.gender}. "
        f"My education level is {education}. "
        f"I am currently {status}, with an annual income of approximately "
        f"{round(profile.income_ppp):,} USD (PPP-adjusted)."
    ]

    if cfg.include_religion:
        try:
            religion = RELIGION_PHRASES[profile.religion]
        except KeyError:
            raise UnknownReligionLabel(profile.religion) from None
        paragraphs.append(f"My religious background is {religion}.")

    behaviour = [
        "I use drugs." if profile.drug_use else "I do not use drugs.",
        "I have been involved in gangs." if profile.gang_exposed else "I have not been involved in gangs.",
    ]
    if cfg.include_immigrant:
        behaviour.append("I am an immigrant." if profile.immigrant else "I am not an immigrant.")
    paragraphs.append(" ".join(behaviour))

    context = []
    if cfg.country_visible:
        context.append(f"I am from Country {profile.country_id}.")
    if cfg.include_society_context:
        if country is not None:
            background = country.society_background
        else:
            background = _society_background(profile.country_id)
        if background:
            context.append(background)
    if context:
        paragraphs.append(" ".join(context))
    return "\n\n".join(paragraphs)


@lru_cache(maxsize=None)
def _society_background(country_id: str) -> str:
    try:
        return load_country(country_id).society_background
    except FileNotFoundError:
        return ""


def punishment_context(scene: Scene, level: int) -> str:
    try:
        text = scene.punishment_texts[level]
    except KeyError:
        raise MissingPunishmentText(f"scene {scene.scene_id!r} has no text for level {level}") from None
    subject = f" (for {scene.punishment_subject})" if scene.punishment_subject else ""
    return f"Punishment impression{subject}: {text}"


def render_options(scene: Scene) -> str:
    return "\n".join(f"{LETTERS[i]}. {o.text}" for i, o in enumerate(scene.options))


def render_decision_prompt(
    profile: AgentProfile | str,
    scene: Scene,
    render_cfg: PromptRenderConfig,
    sampling_cfg: SamplingConfig | None = None,
) -> str:
    """Assemble the single-shot decision prompt for one agent and scene.

    ``profile`` may be a pre-rendered description.  Without a punishment
    impression the whole punishment block, including its blank line, is
    dropped from the template.
    """
    if isinstance(profile, AgentProfile):
        profile_text = describe_self(profile, sampling_cfg or SamplingConfig())
    else:
        profile_text = profile

    if render_cfg.include_punishment_impression:
        context = punishment_context(scene, render_cfg.punishment_level)  # type: ignore[arg-type]
        template = render_cfg.prompt_template
    else:
        context = ""
        template = re.sub(r"\n*\{punishment_context\}\n*", "\n\n", render_cfg.prompt_template)

    values = {
        "profile": profile_text,
        "scene": scene.description,
        "punishment_context": context,
        "options": render_options(scene),
    }
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)
