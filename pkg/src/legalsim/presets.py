"""Named experimental conditions for the company-vs-laborers world."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

from .errors import ConfigError
from .legal import LawCode, LegalConfig, builtin_laws

PRESET_IDS = (
    "pre_legal",
    "evolving",
    "corruption",
    "initialized",
    "high_litigation",
    "pro_company",
    "pro_laborer",
    "perception_positive",
    "perception_negative",
)


@lru_cache(maxsize=None)
def steering_texts() -> dict[str, Any]:
    return json.loads((resources.files("legalsim.data.texts") / "steering.json").read_text("utf-8"))


@dataclass(frozen=True)
class ExperimentPreset:
    preset_id: str
    legal_enabled: bool = True
    legislation: bool = True
    corruption_probability: float = 0.0
    bias: str = "none"
    litigation_fee: float = 0.0
    litigation_counts_as_absence: bool = False
    perception: str = "neutral"
    law_set: str | None = None

    def __post_init__(self) -> None:
        if not self.legal_enabled and (self.law_set or self.legislation):
            raise ConfigError("a preset without a legal system cannot carry laws or legislation")

    def legal_config(self, config: Any = None) -> LegalConfig:
        interval = config.NUM_ACTIONS_PER_MONTH if config is not None else 2
        return LegalConfig(
            enabled=self.legal_enabled,
            corruption_probability=self.corruption_probability,
            bias=self.bias,
            litigation_fee=self.litigation_fee,
            litigation_counts_as_absence=self.litigation_counts_as_absence,
            legislation_interval=interval,
            legislation_enabled=self.legislation,
        )

    def initial_laws(self) -> list[LawCode]:
        return builtin_laws(self.law_set) if self.law_set else []

    def perception_text(self) -> str:
        return steering_texts()["perception"][self.perception]

    def to_dict(self) -> dict[str, Any]:
        return {
            "preset_id": self.preset_id,
            "legal_enabled": self.legal_enabled,
            "legislation": self.legislation,
            "corruption_probability": self.corruption_probability,
            "bias": self.bias,
            "litigation_fee": self.litigation_fee,
            "litigation_counts_as_absence": self.litigation_counts_as_absence,
            "perception": self.perception,
            "law_set": self.law_set,
        }


PRESETS: dict[str, ExperimentPreset] = {
    "pre_legal": ExperimentPreset("pre_legal", legal_enabled=False, legislation=False),
    "evolving": ExperimentPreset("evolving"),
    "corruption": ExperimentPreset("corruption", corruption_probability=0.7),
    "initialized": ExperimentPreset("initialized", law_set="initialized"),
    "high_litigation": ExperimentPreset(
        "high_litigation", law_set="initialized", litigation_fee=200.0, litigation_counts_as_absence=True
    ),
    "pro_company": ExperimentPreset("pro_company", bias="pro_company"),
    "pro_laborer": ExperimentPreset("pro_laborer", bias="pro_laborer"),
    "perception_positive": ExperimentPreset("perception_positive", perception="positive"),
    "perception_negative": ExperimentPreset("perception_negative", perception="negative"),
}


def get_preset(preset_id: str) -> ExperimentPreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise ConfigError(f"unknown preset {preset_id!r}; choose from {', '.join(PRESET_IDS)}") from None
