"""Multi-trial orchestration, run manifests and statistics over persisted logs."""

from __future__ import annotations

import csv
import hashlib
import json
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .presets import ExperimentPreset
from .scripted import MicroBackends
from .simulation import run_trial
from .world import MicroConfig, read_events

EVENT_CLASSES = ("protest_sabotage", "normal_work", "laborer_litigation", "company_litigation")
PROTEST_RULES = ("rule1", "rule2", "contradiction")
NEGOTIATION_RE = re.compile(r"\b(negotiat\w*|bargain\w*)\b", re.IGNORECASE)
MEAN_SD_COLUMNS = ("turn", "mean", "sd", "n")
NOTES = {
    "negotiation": "a WORKING turn whose action negotiates with management is counted as other, not normal_work",
    "litigation_absence": "a rule3 absence caused by filing a suit is NOT WORKING but not a protest; "
    "it is counted as laborer_litigation through the lawsuit_filed event only",
}


# --- event classes ----------------------------------------------------------


def classify_event(line: str | Mapping[str, Any]) -> str:
    """Map one event-log record to a comparison class, or ``other``."""
    ev = json.loads(line) if isinstance(line, str) else line
    kind, payload = ev["kind"], ev.get("payload", {})
    if kind == "work_status":
        if payload.get("status") == "NOT WORKING" and payload.get("rule") in PROTEST_RULES:
            return "protest_sabotage"
        if payload.get("status") == "WORKING":
            return "other" if NEGOTIATION_RE.search(payload.get("action", "")) else "normal_work"
        return "other"
    if kind == "lawsuit_filed":
        return {"laborer": "laborer_litigation", "company": "company_litigation"}.get(payload.get("filer_kind"), "other")
    return "other"


def count_events(events: Iterable[str | Mapping[str, Any]]) -> dict[str, int]:
    counts = dict.fromkeys(EVENT_CLASSES, 0)
    for ev in events:
        cls = classify_event(ev)
        if cls in counts:
            counts[cls] += 1
    return counts


# --- statistics ---------------------------------------------------------


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation; an empty input gives (0, 0)."""
    if not values:
        return 0.0, 0.0
    return statistics.fmean(values), statistics.pstdev(values)


@dataclass
class TrialStats:
    n_trials: int
    turns: list[int]
    welfare_mean: list[float]
    welfare_sd: list[float]
    welfare_n: list[int]
    event_counts: list[dict[str, int]]
    event_mean: dict[str, float]
    event_sd: dict[str, float]
    notes: dict[str, str] = field(default_factory=lambda: dict(NOTES))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_trials": self.n_trials,
            "welfare": [
                {"turn": t, "mean": m, "sd": s, "n": n}
                for t, m, s, n in zip(self.turns, self.welfare_mean, self.welfare_sd, self.welfare_n)
            ],
            "event_counts": self.event_counts,
            "event_mean": self.event_mean,
            "event_sd": self.event_sd,
            "notes": self.notes,
        }


def read_welfare(path: str | Path) -> list[dict[str, Any]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {**row, "turn": int(row["turn"]), "welfare": float(row["welfare"])}
            for row in csv.DictReader(fh)
        ]


def aggregate_trials(trial_dirs: Sequence[str | Path], out_dir: str | Path | None = None) -> TrialStats:
    """Pool welfare over trials x laborers per turn and count event classes per trial.

    Reads only ``welfare.csv`` and ``events.jsonl`` so re-aggregating a
    finished run gives the same numbers.  Writes ``stats.json`` and
    ``mean_sd.csv`` when ``out_dir`` is given.
    """
    if not trial_dirs:
        raise ValueError("need at least one trial directory")
    by_turn: dict[int, list[float]] = {}
    counts = []
    for d in trial_dirs:
        d = Path(d)
        for row in read_welfare(d / "welfare.csv"):
            by_turn.setdefault(row["turn"], []).append(row["welfare"])
        events_path = d / "events.jsonl"
        counts.append(count_events(read_events(events_path)) if events_path.exists() else dict.fromkeys(EVENT_CLASSES, 0))
    turns = sorted(by_turn)
    pooled = [mean_sd(by_turn[t]) for t in turns]
    ev_stats = {c: mean_sd([float(k[c]) for k in counts]) for c in EVENT_CLASSES}
    stats = TrialStats(
        n_trials=len(trial_dirs),
        turns=turns,
        welfare_mean=[m for m, _ in pooled],
        welfare_sd=[s for _, s in pooled],
        welfare_n=[len(by_turn[t]) for t in turns],
        event_counts=counts,
        event_mean={c: ev_stats[c][0] for c in EVENT_CLASSES},
        event_sd={c: ev_stats[c][1] for c in EVENT_CLASSES},
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.json").write_text(json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8")
        with open(out / "mean_sd.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(MEAN_SD_COLUMNS)
            for t, m, s, n in zip(stats.turns, stats.welfare_mean, stats.welfare_sd, stats.welfare_n):
                w.writerow([t, repr(m), repr(s), n])
    return stats


def trial_dirs_of(run_dir: str | Path) -> list[Path]:
    return sorted(p for p in Path(run_dir).glob("trial_*") if (p / "welfare.csv").exists())


# --- manifests ----------------------------------------------------------------


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_hash(config: Mapping[str, Any]) -> str:
    return sha256_bytes(json.dumps(config, sort_keys=True, separators=(",", ":")).encode())


def package_data_hashes(*groups: str) -> dict[str, str]:
    """Hash every JSON/text file in the named ``legalsim.data`` sub-packages."""
    out = {}
    for group in groups:
        root = resources.files(f"legalsim.data.{group}")
        for p in sorted(root.iterdir(), key=lambda p: p.name):
            if p.name.endswith((".json", ".txt")):
                out[f"{group}/{p.name}"] = sha256_bytes(p.read_bytes())
    return out


def file_hashes(paths: Iterable[str | Path]) -> dict[str, str]:
    return {str(p): sha256_bytes(Path(p).read_bytes()) for p in paths if p and Path(p).is_file()}


def write_manifest(out_dir: str | Path, manifest: Mapping[str, Any]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def micro_manifest(
    config: MicroConfig,
    preset: ExperimentPreset,
    seeds: Sequence[int],
    backends: MicroBackends,
    config_file: str | Path | None = None,
) -> dict[str, Any]:
    cfg = config.to_dict()
    return {
        "kind": "micro",
        "preset": preset.to_dict(),
        "legal_config": vars(preset.legal_config(config)),
        "seeds": list(seeds),
        "config": cfg,
        "config_hash": config_hash(cfg),
        "backend_ids": backends.ids(),
        "data_files": {**package_data_hashes("texts", "laws"), **file_hashes([config_file] if config_file else [])},
    }


# --- micro runs ---------------------------------------------------------------


def run_micro(
    config: MicroConfig,
    preset: ExperimentPreset,
    trials: int,
    seed: int,
    backends: MicroBackends,
    out_dir: str | Path,
    *,
    max_workers: int | None = None,
    config_file: str | Path | None = None,
) -> TrialStats:
    """Run ``trials`` independent worlds (seeds ``seed + i``) and aggregate them."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = Path(out_dir)
    seeds = [seed + i for i in range(trials)]
    write_manifest(out, micro_manifest(config, preset, seeds, backends, config_file))
    dirs = [out / f"trial_{i:02d}" for i in range(trials)]
    workers = max_workers or min(trials, 4)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda sd: run_trial(config, preset, sd[0], backends, sd[1]), zip(seeds, dirs)))
    else:
        for s, d in zip(seeds, dirs):
            run_trial(config, preset, s, backends, d)
    return aggregate_trials(dirs, out)
