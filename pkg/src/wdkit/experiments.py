"""Experiment splits and end-to-end run orchestration.

A run is described by a JSON manifest and executed as cast -> generate ->
parse -> score, with every artifact written under a directory named by the
manifest hash so reruns are idempotent:

    {
      "task": "wd",
      "eval":  {"dataset": "abcd", "path": "corpus.json", "split": "test"},
      "train": {"dataset": "abcd", "path": "corpus.json", "split": "train"},
      "spec":  {"kind": "holdout_step", "step": "search-shirt"},
      "cast":  {"include_domain": true, "shuffle_seed": 0},
      "match": {"mode": "stem", "compare_values": true},
      "backend": {"kind": "oracle"}
    }

The split spec reshapes the train corpus (holdout filtering, few-shot
sampling); the eval corpus is cast as loaded, except when a holdout spec
asks for eval filtering too. The optional train block writes a cast file a
fine-tuning script can consume.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from wdkit.corpus import Corpus, Diagnostic, load_abcd, load_multiwoz
from wdkit.errors import UnknownStep
from wdkit.inference import (
    GenLimits,
    GenRequest,
    GenResponse,
    generate_http,
    generate_oracle,
    generate_replay,
    oracle_map,
    write_predictions_jsonl,
)
from wdkit.metrics import build_report, evaluate, write_per_sample, write_report
from wdkit.stepmatch import MatchConfig, MatchMode, remote_provider
from wdkit.taskcast import CastConfig, Task, cast_corpus, write_cast_jsonl

logger = logging.getLogger(__name__)


class SplitKind(str, Enum):
    IN_DISTRIBUTION = "in_distribution"
    HOLDOUT_STEP = "holdout_step"
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"


@dataclass(frozen=True)
class SplitSpec:
    kind: SplitKind
    step: str | None = None
    k: int | None = None
    seed: int | None = None
    source_tag: str | None = None
    target_tag: str | None = None
    filter_eval: bool = False

    def __post_init__(self) -> None:
        if self.kind is SplitKind.HOLDOUT_STEP and not self.step:
            raise ValueError("holdout_step spec needs a step name")
        if self.kind is SplitKind.FEW_SHOT:
            if self.k is None or self.k < 1:
                raise ValueError("few_shot spec needs k >= 1")
            if self.seed is None:
                raise ValueError("few_shot spec needs a seed")
        if self.kind is SplitKind.ZERO_SHOT and not (self.source_tag and self.target_tag):
            raise ValueError("zero_shot spec needs source_tag and target_tag")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        for key in ("step", "k", "seed", "source_tag", "target_tag"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.filter_eval:
            out["filter_eval"] = True
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SplitSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown split spec keys: {sorted(unknown)}")
        data = dict(raw)
        data["kind"] = SplitKind(data.get("kind", "in_distribution"))
        return cls(**data)


def holdout_step(corpus: Corpus, step: str) -> tuple[Corpus, dict]:
    """Drop every dialogue whose gold workflow contains the step."""
    if step not in corpus.domain.names():
        raise UnknownStep(
            f"step {step!r} not in domain {corpus.domain.dataset_tag!r}"
        )
    kept = []
    removed = 0
    for dialogue in corpus.dialogues:
        names = dialogue.gold_workflow.step_names() if dialogue.gold_workflow else ()
        if step in names:
            removed += 1
        else:
            kept.append(dialogue)
    info = {"kind": "holdout_step", "step": step, "removed": removed, "kept": len(kept)}
    note = Diagnostic("holdout_step", f"{step}: removed {removed} dialogues")
    filtered = Corpus(
        tuple(kept), corpus.domain, corpus.split_tag, corpus.diagnostics + (note,)
    )
    return filtered, info


def few_shot_sample(corpus: Corpus, k: int, seed: int) -> tuple[Corpus, dict]:
    """Union of up to k seeded draws per occurring domain step.

    Steps are visited in domain order with one generator, so the sample is
    a pure function of (corpus, k, seed). Dialogues drawn for several steps
    are deduplicated; per-step counts land in the returned info.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = random.Random(seed)
    selected: set[int] = set()
    per_step: dict[str, dict] = {}
    for name in corpus.domain.names():
        containing = [
            index
            for index, dialogue in enumerate(corpus.dialogues)
            if dialogue.gold_workflow and name in dialogue.gold_workflow.step_names()
        ]
        if not containing:
            continue
        drawn = rng.sample(containing, min(k, len(containing)))
        selected.update(drawn)
        per_step[name] = {"available": len(containing), "drawn": len(drawn)}
    dialogues = tuple(corpus.dialogues[index] for index in sorted(selected))
    for name, stats in per_step.items():
        stats["in_sample"] = sum(
            1
            for dialogue in dialogues
            if dialogue.gold_workflow and name in dialogue.gold_workflow.step_names()
        )
    info = {
        "kind": "few_shot",
        "k": k,
        "seed": seed,
        "n_dialogues": len(dialogues),
        "per_step": per_step,
    }
    sampled = Corpus(dialogues, corpus.domain, corpus.split_tag, corpus.diagnostics)
    return sampled, info


def _apply_spec(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, dict]:
    if spec.kind is SplitKind.HOLDOUT_STEP:
        assert spec.step is not None
        return holdout_step(corpus, spec.step)
    if spec.kind is SplitKind.FEW_SHOT:
        assert spec.k is not None and spec.seed is not None
        return few_shot_sample(corpus, spec.k, spec.seed)
    return corpus, {"kind": spec.kind.value}


def manifest_hash(manifest: dict) -> str:
    canonical = json.dumps(
        manifest, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


_BLOCK_KEYS = {"dataset", "path", "split", "domain_tag", "include_values"}
_BACKEND_KEYS = {
    "kind",
    "path",
    "endpoint",
    "batch_size",
    "max_in_flight",
    "timeout",
    "retries",
    "max_new_units",
}
_MANIFEST_KEYS = {"task", "spec", "cast", "match", "backend", "eval", "train"}


def _load_block(block: dict) -> Corpus:
    unknown = set(block) - _BLOCK_KEYS
    if unknown:
        raise ValueError(f"unknown corpus block keys: {sorted(unknown)}")
    dataset = block.get("dataset")
    path = block.get("path")
    if not dataset or not path:
        raise ValueError("corpus block needs 'dataset' and 'path'")
    split = block.get("split", "train")
    domain = None
    if "domain_tag" in block:
        from wdkit.domains import builtin_domain

        domain = builtin_domain(block["domain_tag"])
    if dataset == "abcd":
        return load_abcd(path, split, domain)
    if dataset == "multiwoz":
        return load_multiwoz(
            path, split, domain, include_values=block.get("include_values", False)
        )
    raise ValueError(f"unknown dataset {dataset!r} (expected abcd or multiwoz)")


def _cast_config(raw: dict) -> CastConfig:
    allowed = {f.name for f in dataclasses.fields(CastConfig)}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown cast config keys: {sorted(unknown)}")
    return CastConfig(**raw)


def _match_config(raw: dict) -> MatchConfig:
    allowed = {"mode", "threshold", "compare_values", "provider_endpoint"}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown match config keys: {sorted(unknown)}")
    mode = MatchMode(raw.get("mode", "stem"))
    provider = None
    if mode is MatchMode.SIMILARITY:
        endpoint = raw.get("provider_endpoint")
        if not endpoint:
            raise ValueError("similarity matching needs a provider_endpoint")
        provider = remote_provider(endpoint)
    return MatchConfig(
        mode=mode,
        threshold=raw.get("threshold", 0.95),
        compare_values=raw.get("compare_values", False),
        provider=provider,
    )


def _generate(backend: dict, samples, req: GenRequest) -> GenResponse:
    unknown = set(backend) - _BACKEND_KEYS
    if unknown:
        raise ValueError(f"unknown backend keys: {sorted(unknown)}")
    kind = backend.get("kind", "oracle")
    if kind == "oracle":
        return generate_oracle(oracle_map(samples), req)
    if kind == "replay":
        if "path" not in backend:
            raise ValueError("replay backend needs a 'path'")
        return generate_replay(backend["path"], req)
    if kind == "http":
        if "endpoint" not in backend:
            raise ValueError("http backend needs an 'endpoint'")
        limits = GenLimits(
            batch_size=backend.get("batch_size", 16),
            max_in_flight=backend.get("max_in_flight", 2),
            timeout=backend.get("timeout", 60.0),
            retries=backend.get("retries", 2),
        )
        return generate_http(backend["endpoint"], req, limits)
    raise ValueError(f"unknown backend kind {kind!r}")


def run_experiment(manifest: dict, out_root: str | Path) -> tuple[dict, Path]:
    """Execute one manifest; returns (report document, run directory).

    A run directory that already holds report.json is left untouched and
    its report returned, so interrupted runs keep their partial artifacts
    and finished runs are never redone.
    """
    run_hash = manifest_hash(manifest)
    run_dir = Path(out_root) / f"run_{run_hash}"
    report_path = run_dir / "report.json"
    if report_path.exists():
        logger.info("run %s already has a report, skipping", run_dir.name)
        with open(report_path, encoding="utf-8") as fh:
            return json.load(fh), run_dir

    unknown = set(manifest) - _MANIFEST_KEYS
    if unknown:
        raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
    task = Task(manifest.get("task", "wd"))
    spec = SplitSpec.from_dict(manifest.get("spec", {"kind": "in_distribution"}))
    cast_cfg = _cast_config(manifest.get("cast", {}))
    match_cfg = _match_config(manifest.get("match", {}))
    backend = manifest.get("backend", {"kind": "oracle"})
    if "eval" not in manifest:
        raise ValueError("manifest needs an 'eval' corpus block")

    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n")

    train_info = None
    if "train" in manifest:
        train_corpus = _load_block(manifest["train"])
        train_corpus, train_info = _apply_spec(train_corpus, spec)
        train_diagnostics: list[Diagnostic] = []
        train_samples = list(
            cast_corpus(train_corpus, task, cast_cfg, train_diagnostics)
        )
        write_cast_jsonl(train_samples, run_dir / "train_cast.jsonl")
        train_info = dict(train_info)
        train_info["n_cast_samples"] = len(train_samples)
        train_info["n_diagnostics"] = len(train_corpus.diagnostics) + len(
            train_diagnostics
        )
        with open(run_dir / "train_info.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(train_info, indent=2, sort_keys=True) + "\n")

    eval_corpus = _load_block(manifest["eval"])
    if spec.kind is SplitKind.HOLDOUT_STEP and spec.filter_eval:
        eval_corpus, _ = _apply_spec(eval_corpus, spec)
    diagnostics: list[Diagnostic] = []
    samples = list(cast_corpus(eval_corpus, task, cast_cfg, diagnostics))
    write_cast_jsonl(samples, run_dir / "cast.jsonl")

    req = GenRequest(
        ids=tuple(s.id for s in samples),
        inputs=tuple(s.input_text for s in samples),
        max_new_units=backend.get("max_new_units", 256),
    )
    response = _generate(backend, samples, req)
    write_predictions_jsonl(response.ids, response.outputs, run_dir / "predictions.jsonl")

    predictions = dict(zip(response.ids, response.outputs))
    score, rows = evaluate(task, samples, predictions, match_cfg)
    write_per_sample(rows, run_dir / "per_sample.jsonl")

    config_echo = {
        "manifest_hash": run_hash,
        "domain_tag": eval_corpus.domain.dataset_tag,
        "spec": spec.to_dict(),
        "cast": {
            "include_domain": cast_cfg.include_domain,
            "shuffle_seed": cast_cfg.shuffle_seed,
            "shuffle": cast_cfg.shuffle,
            "use_names_not_descriptions": cast_cfg.use_names_not_descriptions,
            "include_values": cast_cfg.include_values,
        },
        "match": {
            "mode": match_cfg.mode.value,
            "threshold": match_cfg.threshold,
            "compare_values": match_cfg.compare_values,
        },
        "backend_kind": backend.get("kind", "oracle"),
    }
    extra: dict = {
        "input_chars_max": max((len(s.input_text) for s in samples), default=0),
        "target_chars_max": max((len(s.target_text) for s in samples), default=0),
        "n_diagnostics": len(eval_corpus.diagnostics) + len(diagnostics),
    }
    if train_info is not None:
        extra["train_info"] = train_info
    doc = build_report(task, score, config_echo, extra)
    write_report(doc, report_path)
    return doc, run_dir
