"""Serialize dialogues into input/target text pairs.

Three casts share one utterance convention: texts are joined by a single
space with no speaker tags. Targets follow fixed delimiter grammars, so
values containing a delimiter are flagged rather than escaped.

Workflow extraction (whole dialogue):
    input  "Extract workflow: Dialogue: <texts>[ Steps: <d1>,<d2>,...]"
    target "Flow: <desc>[: v1;v2],<desc>,..."

Action prediction (one take_action turn, history strictly before it):
    input  "Extract AST: <texts before turn>"
    target "AST: <name>[:v1, v2, ...]"

Turn prediction (any annotated turn):
    input  "Extract CDS: History: <texts>[ Candidates: <c1>,<c2>,...]"
    target "CDS: <intent>,<nextstep>[,<payload>]"
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from wdkit.corpus import (
    Corpus,
    Diagnostic,
    Dialogue,
    GoldTurn,
    NextStep,
    StepDomain,
)
from wdkit.errors import (
    EmptyDialogue,
    MalformedCorpus,
    MissingGoldFields,
    NotAnActionTurn,
    WdkitError,
)


class Task(str, Enum):
    WD = "wd"
    AST = "ast"
    CDS = "cds"


@dataclass(frozen=True)
class CastSample:
    id: str
    task: Task
    input_text: str
    target_text: str


@dataclass(frozen=True)
class CastConfig:
    """Knobs for casting; defaults follow the target grammars above.

    The domain shuffle is re-seeded per sample from (shuffle_seed, sample
    id), so a fixed seed reproduces every permutation while still varying
    them across samples.
    """

    include_domain: bool = False
    shuffle_seed: int | None = None
    shuffle: bool = True
    use_names_not_descriptions: bool = False
    include_values: bool = True
    wd_source_prefix: str = "Extract workflow: "
    wd_target_prefix: str = "Flow: "
    ast_source_prefix: str = "Extract AST: "
    ast_target_prefix: str = "AST: "
    cds_source_prefix: str = "Extract CDS: "
    cds_target_prefix: str = "CDS: "

    def __post_init__(self) -> None:
        if self.include_domain and self.shuffle and self.shuffle_seed is None:
            raise ValueError("include_domain with shuffling requires a shuffle_seed")


def _note(diagnostics: list[Diagnostic] | None, code: str, detail: str) -> None:
    if diagnostics is not None:
        diagnostics.append(Diagnostic(code, detail))


def _check_delimiters(
    sample_id: str,
    values: Iterable[str],
    diagnostics: list[Diagnostic] | None,
    delimiters: str,
) -> None:
    for value in values:
        for delim in delimiters:
            if delim in value:
                _note(
                    diagnostics,
                    "delimiter_collision",
                    f"{sample_id}: value {value!r} contains {delim!r}",
                )


def _step_text(
    label: str,
    values: tuple[str, ...],
    cfg: CastConfig,
    sample_id: str,
    diagnostics: list[Diagnostic] | None,
) -> str:
    if "," in label:
        _note(diagnostics, "delimiter_collision", f"{sample_id}: step {label!r} contains ','")
    if not cfg.include_values or not values:
        return label
    _check_delimiters(sample_id, values, diagnostics, ",;")
    return label + ": " + ";".join(values)


def cast_wd(
    dialogue: Dialogue,
    domain: StepDomain | None,
    cfg: CastConfig,
    diagnostics: list[Diagnostic] | None = None,
) -> CastSample:
    if not dialogue.utterances:
        raise EmptyDialogue(f"dialogue {dialogue.id!r} has no utterances")
    if dialogue.gold_workflow is None:
        raise MissingGoldFields(f"dialogue {dialogue.id!r} has no gold workflow")

    input_text = (
        cfg.wd_source_prefix
        + "Dialogue: "
        + " ".join(u.text for u in dialogue.utterances)
    )
    if domain is not None and cfg.include_domain:
        if cfg.use_names_not_descriptions:
            items = list(domain.names())
        else:
            items = list(domain.descriptions())
        if cfg.shuffle:
            random.Random(f"{cfg.shuffle_seed}:{dialogue.id}").shuffle(items)
        input_text += " Steps: " + ",".join(items)

    parts = []
    for step in dialogue.gold_workflow.steps:
        label = step.name if cfg.use_names_not_descriptions else step.description
        parts.append(_step_text(label, step.values, cfg, dialogue.id, diagnostics))
    target_text = cfg.wd_target_prefix + ",".join(parts)
    return CastSample(dialogue.id, Task.WD, input_text, target_text)


def _history(dialogue: Dialogue, turn: GoldTurn) -> str:
    return " ".join(u.text for u in dialogue.utterances[: turn.turn_index])


def _ast_tail(
    name: str,
    values: tuple[str, ...],
    sample_id: str,
    diagnostics: list[Diagnostic] | None,
) -> str:
    if not values:
        return name
    _check_delimiters(sample_id, values, diagnostics, ",")
    return name + ":" + ", ".join(values)


def cast_ast(
    dialogue: Dialogue,
    turn: GoldTurn,
    cfg: CastConfig | None = None,
    diagnostics: list[Diagnostic] | None = None,
) -> CastSample:
    if cfg is None:
        cfg = CastConfig()
    if turn.nextstep is not NextStep.TAKE_ACTION:
        raise NotAnActionTurn(
            f"{dialogue.id}:{turn.turn_index} is {turn.nextstep}, not take_action"
        )
    assert turn.action_name is not None
    sample_id = f"{dialogue.id}:{turn.turn_index}"
    input_text = cfg.ast_source_prefix + _history(dialogue, turn)
    target_text = cfg.ast_target_prefix + _ast_tail(
        turn.action_name, turn.action_values, sample_id, diagnostics
    )
    return CastSample(sample_id, Task.AST, input_text, target_text)


def cast_cds(
    dialogue: Dialogue,
    turn: GoldTurn,
    cfg: CastConfig | None = None,
    diagnostics: list[Diagnostic] | None = None,
) -> CastSample:
    if cfg is None:
        cfg = CastConfig()
    sample_id = f"{dialogue.id}:{turn.turn_index}"
    if turn.nextstep is None:
        raise MissingGoldFields(f"{sample_id}: no nextstep annotation")
    if turn.intent is None:
        raise MissingGoldFields(f"{sample_id}: no intent annotation")

    input_text = cfg.cds_source_prefix + "History: " + _history(dialogue, turn)
    if turn.nextstep is NextStep.RETRIEVE_UTTERANCE:
        input_text += " Candidates: " + ",".join(turn.candidate_utterances)

    target_text = cfg.cds_target_prefix + turn.intent + "," + turn.nextstep.value
    if turn.nextstep is NextStep.TAKE_ACTION:
        assert turn.action_name is not None
        target_text += "," + _ast_tail(
            turn.action_name, turn.action_values, sample_id, diagnostics
        )
    elif turn.nextstep is NextStep.RETRIEVE_UTTERANCE:
        if turn.gold_utterance is None:
            raise MissingGoldFields(f"{sample_id}: no gold utterance")
        target_text += "," + turn.gold_utterance
    return CastSample(sample_id, Task.CDS, input_text, target_text)


def cast_corpus(
    corpus: Corpus,
    task: Task,
    cfg: CastConfig,
    diagnostics: list[Diagnostic] | None = None,
) -> Iterator[CastSample]:
    """Yield samples in (dialogue, turn) order, skipping uncastable ones.

    Per-sample failures become diagnostics rather than aborting the stream.
    """
    for dialogue in corpus.dialogues:
        if task is Task.WD:
            try:
                yield cast_wd(dialogue, corpus.domain, cfg, diagnostics)
            except WdkitError as exc:
                _note(diagnostics, "cast_error", f"{dialogue.id}: {exc}")
            continue
        for turn in dialogue.gold_turns:
            if task is Task.AST and turn.nextstep is not NextStep.TAKE_ACTION:
                continue
            if turn.nextstep is None:
                continue
            cast = cast_ast if task is Task.AST else cast_cds
            try:
                yield cast(dialogue, turn, cfg, diagnostics)
            except WdkitError as exc:
                _note(diagnostics, "cast_error", f"{dialogue.id}:{turn.turn_index}: {exc}")


def write_cast_jsonl(samples: Iterable[CastSample], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            row = {
                "id": sample.id,
                "task": sample.task.value,
                "input": sample.input_text,
                "target": sample.target_text,
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_cast_jsonl(path: str | Path) -> list[CastSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedCorpus(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            try:
                samples.append(
                    CastSample(
                        id=str(row["id"]),
                        task=Task(row["task"]),
                        input_text=str(row["input"]),
                        target_text=str(row["target"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise MalformedCorpus(f"{path}:{line_no}: {exc!r}") from exc
    return samples
