"""Command-line entry points.

Subcommands: extract (run the full pipeline and write predictions, metrics,
and the reflection audit log), tune-thresholds, evaluate, gen-decomp, and
simulate. All reports are JSON; files are written once, atomically, at the
end of a run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import decomp, simulate
from .backends import make_backend
from .confidence import (
    ThresholdSet,
    bundled_thresholds,
    load_threshold_set,
    save_threshold_set,
)
from .decomp import TaskVariant, generate_dataset, write_dataset
from .ensemble import default_agents, run_self_moa
from .errors import ConfigurationError, ReventError
from .ingest import load_corpus, load_final_predictions, load_tagger_predictions
from .metrics import gold_from_corpus, score_predictions
from .pipeline import backend_reflector, extract_document
from .reflection import AuditLog, ReflectionConfig
from .tuning import DevPredictions, tune_thresholds

_GATE_FLAGS = {"trgC": "trg-c", "trgI": "trg-i"}


@dataclass
class RunConfig:
    """Validated configuration for one extract run."""

    corpus: Path
    tagger_preds: Path
    backend: str
    out_dir: Path
    agents: int = 10
    temperature: float = 0.9
    thresholds_path: str | None = None
    tune_corpus: Path | None = None
    tune_tagger_preds: Path | None = None
    overlap_threshold: float = 0.5
    seed: int = 0
    metrics_gate: str = "trg-c"
    grid_step: float = 0.05
    parallelism: int = 4

    def __post_init__(self):
        if (self.thresholds_path is None) == (self.tune_corpus is None):
            raise ConfigurationError(
                "exactly one threshold source must be set: --thresholds or --tune"
            )
        if self.tune_corpus is not None and self.tune_tagger_preds is None:
            raise ConfigurationError("--tune requires --tune-tagger-preds")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_thresholds(source: str) -> ThresholdSet:
    if source.startswith("builtin:"):
        parts = source.split(":", 1)[1].split("/")
        if len(parts) != 3:
            raise ConfigurationError(
                "builtin threshold descriptor must be builtin:MODEL/DATASET/TEMP"
            )
        return bundled_thresholds(*parts)
    return load_threshold_set(source)


def _gather_predictions(corpus, tagger_preds, backend, agents, parallelism):
    smoa = {}
    for doc in corpus:
        prompt = decomp.extraction_prompt(doc)
        smoa[doc.doc_id] = run_self_moa(doc, prompt, agents, backend, parallelism)
    return DevPredictions(tagger=tagger_preds, smoa=smoa, n_agents=len(agents))


def run_pipeline(config: RunConfig) -> dict:
    """Execute the extract workflow and write all artifacts.

    Returns a small summary dict (also written as run_summary.json).
    """
    corpus = load_corpus(config.corpus)
    tagger_preds = load_tagger_predictions(config.tagger_preds, corpus)
    backend = make_backend(config.backend, corpus=corpus)
    agents = default_agents(config.agents, temperature=config.temperature)

    if config.thresholds_path is not None:
        thresholds = _resolve_thresholds(config.thresholds_path)
    else:
        dev_corpus = load_corpus(config.tune_corpus)
        dev_tagger = load_tagger_predictions(config.tune_tagger_preds, dev_corpus)
        dev_backend = make_backend(config.backend, corpus=dev_corpus)
        dev_predictions = _gather_predictions(
            dev_corpus, dev_tagger, dev_backend, agents, config.parallelism
        )
        thresholds = tune_thresholds(
            dev_corpus,
            dev_predictions,
            grid_step=config.grid_step,
            overlap_threshold=config.overlap_threshold,
        )

    audit = AuditLog()
    reflector = backend_reflector(backend, ReflectionConfig(), audit)

    prediction_lines = []
    final_by_doc = {}
    for doc in corpus:
        prompt = decomp.extraction_prompt(doc)
        events, ledger = run_self_moa(doc, prompt, agents, backend, config.parallelism)
        result = extract_document(
            doc,
            tagger_preds.get(doc.doc_id, []),
            events,
            ledger,
            len(agents),
            thresholds,
            config.overlap_threshold,
            reflector,
        )
        final_by_doc[doc.doc_id] = result
        prediction_lines.append(
            json.dumps(
                {"doc_id": doc.doc_id, "events": [pe.to_record() for pe in result.final]},
                ensure_ascii=False,
                sort_keys=True,
            )
        )

    out = Path(config.out_dir)
    _atomic_write(out / "predictions.jsonl", "\n".join(prediction_lines) + "\n")
    _atomic_write(
        out / "audit.jsonl",
        "".join(
            json.dumps(e, ensure_ascii=False, sort_keys=True) + "\n" for e in audit.entries
        ),
    )
    save_threshold_set(thresholds, out / "thresholds.json")

    summary: dict = {
        "documents": len(corpus),
        "events": sum(len(r.final) for r in final_by_doc.values()),
        "thresholds": thresholds.as_dict(),
        "seed": config.seed,
        "overlap_threshold": config.overlap_threshold,
        "agents": config.agents,
        "backend": str(config.backend),
    }
    if all(doc.gold_events is not None for doc in corpus):
        metrics = score_predictions(
            {doc_id: r.final_events for doc_id, r in final_by_doc.items()},
            gold_from_corpus(corpus),
            gating=config.metrics_gate,
        )
        _atomic_write(
            out / "metrics.json",
            json.dumps(metrics.as_dict(), indent=2, sort_keys=True) + "\n",
        )
        summary["metrics"] = metrics.as_dict()
        print(metrics.table())
    _atomic_write(
        out / "run_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return summary


def _cmd_extract(args) -> int:
    config = RunConfig(
        corpus=args.corpus,
        tagger_preds=args.tagger_preds,
        backend=args.backend,
        out_dir=args.out,
        agents=args.agents,
        temperature=args.temperature,
        thresholds_path=args.thresholds,
        tune_corpus=args.tune,
        tune_tagger_preds=args.tune_tagger_preds,
        overlap_threshold=args.overlap_threshold,
        seed=args.seed,
        metrics_gate=_GATE_FLAGS[args.metrics_gate],
        grid_step=args.grid_step,
        parallelism=args.parallelism,
    )
    run_pipeline(config)
    return 0


def _cmd_tune(args) -> int:
    corpus = load_corpus(args.corpus)
    tagger_preds = load_tagger_predictions(args.tagger_preds, corpus)
    backend = make_backend(args.backend, corpus=corpus)
    agents = default_agents(args.agents, temperature=args.temperature)
    predictions = _gather_predictions(corpus, tagger_preds, backend, agents, args.parallelism)
    thresholds = tune_thresholds(
        corpus,
        predictions,
        grid_step=args.grid_step,
        overlap_threshold=args.overlap_threshold,
        reflection_standin=args.reflection_standin,
    )
    save_threshold_set(thresholds, args.out)
    print(json.dumps(thresholds.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_evaluate(args) -> int:
    corpus = load_corpus(args.corpus)
    preds = load_final_predictions(args.predictions, corpus)
    metrics = score_predictions(
        preds, gold_from_corpus(corpus), gating=_GATE_FLAGS[args.metrics_gate]
    )
    if args.out:
        _atomic_write(
            Path(args.out), json.dumps(metrics.as_dict(), indent=2, sort_keys=True) + "\n"
        )
    print(metrics.table())
    return 0


def _cmd_gen_decomp(args) -> int:
    corpus = load_corpus(args.corpus)
    variants = None
    if args.variants:
        wanted = set(args.variants.split(","))
        variants = {v for v in TaskVariant if v.value in wanted}
        missing = wanted - {v.value for v in variants}
        if missing:
            raise ConfigurationError(f"unknown variants: {sorted(missing)}")
    records = generate_dataset(corpus, variants=variants, seed=args.seed)
    write_dataset(records, args.out)
    by_variant: dict[str, int] = {}
    for record in records:
        by_variant[record.variant.value] = by_variant.get(record.variant.value, 0) + 1
    print(json.dumps({"records": len(records), "by_variant": by_variant},
                     indent=2, sort_keys=True))
    return 0


def _cmd_simulate(args) -> int:
    scenario = simulate.load_scenario(args.scenario) if args.scenario else simulate.default_scenario()
    report = simulate.run_scenario(scenario)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        _atomic_write(Path(args.out), text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revent",
        description="Reconcile event-extraction predictions from a sequence "
        "tagger and a generative agent ensemble.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_backend_flags(p):
        p.add_argument("--backend", required=True,
                       help="chat backend: http(s) URL, replay:PATH, or oracle")
        p.add_argument("--agents", type=int, default=10)
        p.add_argument("--temperature", type=float, default=0.9)
        p.add_argument("--parallelism", type=int, default=4)

    p = sub.add_parser("extract", help="run the full pipeline on a corpus")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--tagger-preds", required=True, type=Path)
    add_backend_flags(p)
    p.add_argument("--thresholds",
                   help="threshold JSON path or builtin:MODEL/DATASET/TEMP")
    p.add_argument("--tune", type=Path, help="dev corpus to tune thresholds on")
    p.add_argument("--tune-tagger-preds", type=Path)
    p.add_argument("--overlap-threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metrics-gate", choices=sorted(_GATE_FLAGS), default="trgC")
    p.add_argument("--grid-step", type=float, default=0.05)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("tune-thresholds", help="calibrate thresholds on a dev split")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--tagger-preds", required=True, type=Path)
    add_backend_flags(p)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--overlap-threshold", type=float, default=0.5)
    p.add_argument("--reflection-standin", default="keep-all",
                   choices=["keep-all", "drop-all", "oracle"])
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("evaluate", help="score a prediction file against gold")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--predictions", required=True, type=Path)
    p.add_argument("--metrics-gate", choices=sorted(_GATE_FLAGS), default="trgC")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gen-decomp", help="emit the decomposed instruction dataset")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants", help="comma-separated variant names (default: all)")
    p.set_defaults(func=_cmd_gen_decomp)

    p = sub.add_parser("simulate", help="run the seeded complementarity scenario")
    p.add_argument("--scenario", type=Path, help="scenario config JSON")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ReventError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
