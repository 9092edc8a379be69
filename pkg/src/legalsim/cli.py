"""Command line entry point: ``legalsim macro|micro|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import harness
from .decision import make_macro_backend
from .errors import LegalSimError
from .macro import MacroRunSpec, punishment_sweep, read_decisions, recount, run_macro, write_sweep_csv
from .population import load_country
from .presets import PRESET_IDS, get_preset
from .scenario import PUNISHMENT_LEVELS, get_scene
from .scripted import make_micro_backends
from .world import MicroConfig

log = logging.getLogger("legalsim")

EXIT_CONFIG = 2


def _level(text: str) -> int | str:
    if text == "sweep":
        return text
    try:
        level = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"level must be 0..5 or 'sweep', got {text!r}") from None
    if level not in PUNISHMENT_LEVELS:
        raise argparse.ArgumentTypeError(f"level must be 0..5 or 'sweep', got {text!r}")
    return level


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="legalsim", description="Agent-based crime and labor-law simulations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("macro", help="crime-decision experiment over a synthetic population")
    m.add_argument("--country", required=True, help="built-in id (A-D) or a country JSON file")
    m.add_argument("--scene", default="theft", help="built-in scene id or a scene JSON file")
    m.add_argument("--level", type=_level, default=None, help="punishment level 0..5, or 'sweep' for baseline plus 0..5")
    m.add_argument("--n", type=int, default=100, help="population size")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--backend", default="scripted:always_legal", help="scripted:<policy|file.json> or remote:<config.json>")
    m.add_argument("--out", default="runs/macro")
    m.add_argument("--no-religion", action="store_true", help="leave religion out of agent descriptions")
    m.add_argument("--immigrant", action="store_true", help="mention immigrant status")
    m.add_argument("--country-visible", action="store_true", help="name the country in agent descriptions")
    m.add_argument("--society-context", action="store_true", help="add the country's society background")

    mi = sub.add_parser("micro", help="company-vs-laborers world under a legal-system preset")
    mi.add_argument("--preset", default="evolving", choices=PRESET_IDS)
    mi.add_argument("--trials", type=int, default=1)
    mi.add_argument("--seed", type=int, default=0)
    mi.add_argument("--backend", default="scripted:baseline", help="scripted:<baseline|exploit> or remote:<config.json>")
    mi.add_argument("--out", default="runs/micro")
    mi.add_argument("--config", default=None, help="JSON file overriding run constants")
    mi.add_argument("--workers", type=int, default=None, help="trials run at once")

    r = sub.add_parser("report", help="re-aggregate a finished run directory")
    r.add_argument("run_dir")
    return parser


def cmd_macro(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise LegalSimError("--n must be >= 1")
    country = load_country(args.country)
    scene = get_scene(args.scene)
    backend = make_macro_backend(args.backend, seed=args.seed)
    spec = MacroRunSpec(
        country_id=country.country_id,
        scene_id=scene.scene_id,
        punishment_level=None if args.level == "sweep" else args.level,
        population_size=args.n,
        seed=args.seed,
        include_religion=not args.no_religion,
        include_immigrant=args.immigrant,
        country_visible=args.country_visible,
        include_society_context=args.society_context,
        backend=args.backend,
        output_dir=args.out,
    )
    user_files = [args.country, args.scene, args.backend.partition(":")[2]]
    manifest = {
        "kind": "macro",
        "country_id": spec.country_id,
        "scene_id": spec.scene_id,
        "level": args.level,
        "population_size": spec.population_size,
        "seeds": [spec.seed],
        "sampling": vars(spec.sampling_config()),
        "backend_ids": {"decision": backend.backend_id},
        "config_hash": harness.config_hash({k: v for k, v in vars(spec).items() if k != "output_dir"}),
        "data_files": {**harness.package_data_hashes("countries", "scenes", "policies"), **harness.file_hashes(user_files)},
    }
    harness.write_manifest(args.out, manifest)
    if args.level == "sweep":
        reports = punishment_sweep(spec, country, scene, backend)
        for r in reports:
            print(f"level {r.punishment_level if r.punishment_level is not None else 'baseline'}: crime_rate {r.crime_rate:.4f} (n={r.n_decided})")
    else:
        report, _ = run_macro(spec, country, scene, backend)
        # a single level still gets a one-row sweep table
        write_sweep_csv([report], Path(args.out) / "sweep.csv")
        print(f"crime_rate {report.crime_rate:.4f} (n={report.n_decided}, unparsed={report.unparsed_count})")
    print(f"wrote {args.out}")
    return 0


def cmd_micro(args: argparse.Namespace) -> int:
    config = MicroConfig.from_file(args.config) if args.config else MicroConfig()
    preset = get_preset(args.preset)
    backends = make_micro_backends(args.backend)
    stats = harness.run_micro(
        config, preset, args.trials, args.seed, backends, args.out, max_workers=args.workers, config_file=args.config
    )
    final = stats.welfare_mean[-1] if stats.welfare_mean else float("nan")
    print(f"{args.trials} trial(s), {config.total_turns} turns, final mean welfare {final:.2f}")
    for c in harness.EVENT_CLASSES:
        print(f"  {c}: {stats.event_mean[c]:.2f} +/- {stats.event_sd[c]:.2f}")
    print(f"wrote {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run = Path(args.run_dir)
    trials = harness.trial_dirs_of(run)
    if trials:
        stats = harness.aggregate_trials(trials, run)
        print(json.dumps({"n_trials": stats.n_trials, "event_mean": stats.event_mean, "event_sd": stats.event_sd}, indent=2))
        return 0
    if (run / "decisions.jsonl").exists():
        n_total, n_decided, n_crime = recount(read_decisions(run / "decisions.jsonl"))
        rate = n_crime / n_decided if n_decided else 0.0
        print(json.dumps({"n_total": n_total, "n_decided": n_decided, "n_crime": n_crime, "crime_rate": rate}, indent=2))
        return 0
    raise LegalSimError(f"{run} holds neither trial directories nor a decision log")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"macro": cmd_macro, "micro": cmd_micro, "report": cmd_report}[args.command]
    try:
        return handler(args)
    except (LegalSimError, KeyError, FileNotFoundError, ValueError) as exc:
        print(f"legalsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
