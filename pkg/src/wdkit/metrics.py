"""Evaluation scores for the three tasks.

Workflow predictions earn an exact-match bit (order and length must both be
right) and a cascading fraction (longest correct prefix over gold length,
after chopping long predictions and padding short ones with the reserved
"Missing" step). Action predictions are scored as name accuracy (B-Slot),
value-list accuracy (Value), and their conjunction (Action). Turn
predictions add intent, next-step, and next-utterance accuracies plus a
conversation-level cascading score over turn prefixes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from wdkit.corpus import GoldTurn, NextStep, Workflow, WorkflowStep
from wdkit.errors import IdMismatch, MalformedCorpus, MissingGoldFields, MissingPrediction
from wdkit.flowparse import ParsedAST, ParsedCDS, ParsedWD, parse_ast, parse_cds, parse_wd
from wdkit.stepmatch import MISSING_STEP, MatchConfig, match_step
from wdkit.taskcast import CastSample, Task


@dataclass(frozen=True)
class WDScore:
    exact_match: float
    cascading: float
    n_samples: int
    failure_breakdown: dict

    def __post_init__(self) -> None:
        if not 0.0 <= self.exact_match <= 1.0 or not 0.0 <= self.cascading <= 1.0:
            raise ValueError("score fractions must lie in [0, 1]")


@dataclass(frozen=True)
class ASTScore:
    b_slot: float
    value: float
    action: float
    n_samples: int

    def __post_init__(self) -> None:
        # the joint accuracy cannot exceed either marginal
        if self.action > min(self.b_slot, self.value) + 1e-9:
            raise ValueError("joint action accuracy exceeds a marginal accuracy")


@dataclass(frozen=True)
class CDSScore:
    intent: float
    nextstep: float
    b_slot: float
    value: float
    recall_at_1: float
    cascading: float
    n_samples: int
    n_conversations: int


def align(pred: ParsedWD, gold: Workflow) -> tuple[tuple[str, tuple[str, ...]], ...]:
    """Chop a long prediction to gold length; pad a short one with the
    sentinel step (which no domain description can match)."""
    aligned = list(pred.steps[: len(gold.steps)])
    while len(aligned) < len(gold.steps):
        aligned.append((MISSING_STEP, ()))
    return tuple(aligned)


def exact_match(pred: ParsedWD, gold: Workflow, cfg: MatchConfig) -> int:
    """1 iff the original lengths agree and every position matches."""
    if len(pred.steps) != len(gold.steps):
        return 0
    for predicted, step in zip(pred.steps, gold.steps):
        if not match_step(predicted, (step.description, step.values), cfg):
            return 0
    return 1


def cascading_eval(pred: ParsedWD, gold: Workflow, cfg: MatchConfig) -> float:
    """Longest all-correct prefix after alignment, over gold length.

    An empty gold workflow scores 1.0 against an empty prediction and 0.0
    against anything else.
    """
    if not gold.steps:
        return 1.0 if not pred.steps else 0.0
    prefix = 0
    for predicted, step in zip(align(pred, gold), gold.steps):
        if not match_step(predicted, (step.description, step.values), cfg):
            break
        prefix += 1
    return prefix / len(gold.steps)


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 1.0


def _ratio(hits: int, total: int) -> float:
    # vacuous denominators score perfect: no applicable turn, no error
    return hits / total if total else 1.0


def _text_eq(a: str, b: str) -> bool:
    return a.strip().casefold() == b.strip().casefold()


def _value_list_eq(pred_values: Sequence[str], gold_values: Sequence[str]) -> bool:
    if len(pred_values) != len(gold_values):
        return False
    return all(_text_eq(p, g) for p, g in zip(pred_values, gold_values))


def _ws_eq(a: str, b: str) -> bool:
    return " ".join(a.split()) == " ".join(b.split())


def ast_score(
    preds: Sequence[ParsedAST],
    golds: Sequence[tuple[str, Sequence[str]]],
    cfg: MatchConfig | None = None,
) -> ASTScore:
    """Accuracies over id-aligned action predictions.

    cfg is accepted for signature parity with the other scorers; action and
    value comparison is exact (trimmed, case-insensitive), never stemmed.
    """
    del cfg
    if len(preds) != len(golds):
        raise IdMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    b_hits = v_hits = joint = 0
    for pred, (gold_action, gold_values) in zip(preds, golds):
        b_ok, v_ok = _ast_flags(pred, gold_action, gold_values)
        b_hits += b_ok
        v_hits += v_ok
        joint += b_ok and v_ok
    n = len(preds)
    return ASTScore(_ratio(b_hits, n), _ratio(v_hits, n), _ratio(joint, n), n)


def _ast_flags(
    pred: ParsedAST, gold_action: str, gold_values: Sequence[str]
) -> tuple[bool, bool]:
    return _text_eq(pred.action, gold_action), _value_list_eq(pred.values, gold_values)


def _cds_turn(pred: ParsedCDS, gold: GoldTurn) -> dict:
    """Per-turn comparison flags; payload flags are None when inapplicable."""
    if gold.nextstep is None:
        raise MissingGoldFields(f"turn {gold.turn_index} has no nextstep annotation")
    flags = {
        "intent": _text_eq(pred.intent, gold.intent or ""),
        "nextstep": _text_eq(pred.nextstep, gold.nextstep.value),
        "b_slot": None,
        "value": None,
        "recall_at_1": None,
    }
    correct = flags["intent"] and flags["nextstep"]
    if gold.nextstep is NextStep.TAKE_ACTION:
        tail = parse_ast(pred.payload) if pred.payload else None
        assert gold.action_name is not None
        flags["b_slot"] = tail is not None and _text_eq(tail.action, gold.action_name)
        flags["value"] = tail is not None and _value_list_eq(
            tail.values, gold.action_values
        )
        correct = correct and flags["b_slot"] and flags["value"]
    elif gold.nextstep is NextStep.RETRIEVE_UTTERANCE:
        flags["recall_at_1"] = pred.payload is not None and _ws_eq(
            pred.payload, gold.gold_utterance or ""
        )
        correct = correct and flags["recall_at_1"]
    flags["turn_correct"] = correct
    return flags


def cds_score(
    preds: Sequence[ParsedCDS],
    golds: Sequence[GoldTurn],
    convo_ids: Sequence[str],
) -> CDSScore:
    """Scores over id-aligned turns; convo_ids groups turns into
    conversations for the cascading average, in list order."""
    if not (len(preds) == len(golds) == len(convo_ids)):
        raise IdMismatch(
            f"{len(preds)} predictions vs {len(golds)} golds vs {len(convo_ids)} ids"
        )
    intent_hits = nextstep_hits = 0
    action_turns = b_hits = v_hits = 0
    retrieve_turns = r_hits = 0
    flags_per_turn = []
    for pred, gold in zip(preds, golds):
        flags = _cds_turn(pred, gold)
        flags_per_turn.append(flags["turn_correct"])
        intent_hits += flags["intent"]
        nextstep_hits += flags["nextstep"]
        if flags["b_slot"] is not None:
            action_turns += 1
            b_hits += flags["b_slot"]
            v_hits += flags["value"]
        if flags["recall_at_1"] is not None:
            retrieve_turns += 1
            r_hits += flags["recall_at_1"]

    grouped: dict[str, list[bool]] = {}
    order: list[str] = []
    for convo_id, flag in zip(convo_ids, flags_per_turn):
        if convo_id not in grouped:
            grouped[convo_id] = []
            order.append(convo_id)
        grouped[convo_id].append(flag)
    contributions = []
    for convo_id in order:
        turn_flags = grouped[convo_id]
        prefix = 0
        for flag in turn_flags:
            if not flag:
                break
            prefix += 1
        contributions.append(prefix / len(turn_flags))

    n = len(preds)
    return CDSScore(
        intent=_ratio(intent_hits, n),
        nextstep=_ratio(nextstep_hits, n),
        b_slot=_ratio(b_hits, action_turns),
        value=_ratio(v_hits, action_turns),
        recall_at_1=_ratio(r_hits, retrieve_turns),
        cascading=_mean(contributions),
        n_samples=n,
        n_conversations=len(contributions),
    )


def _gold_workflow(sample: CastSample) -> Workflow:
    parsed = parse_wd(sample.target_text)
    steps = tuple(
        WorkflowStep(name=desc, description=desc, values=values)
        for desc, values in parsed.steps
    )
    return Workflow(steps)


def _split_turn_id(sample_id: str, fallback: int) -> tuple[str, int]:
    convo_id, _, index = sample_id.rpartition(":")
    if convo_id:
        try:
            return convo_id, int(index)
        except ValueError:
            pass
    return sample_id, fallback


def _gold_turn(sample: CastSample, fallback_index: int) -> tuple[str, GoldTurn]:
    convo_id, turn_index = _split_turn_id(sample.id, fallback_index)
    parsed = parse_cds(sample.target_text)
    try:
        nextstep = NextStep(parsed.nextstep)
    except ValueError:
        raise MalformedCorpus(f"cast target for {sample.id!r} has no valid nextstep")
    if nextstep is NextStep.TAKE_ACTION:
        if parsed.payload is None:
            raise MalformedCorpus(f"cast target for {sample.id!r} lacks an action")
        tail = parse_ast(parsed.payload)
        return convo_id, GoldTurn(
            turn_index,
            parsed.intent,
            nextstep,
            action_name=tail.action,
            action_values=tail.values,
        )
    if nextstep is NextStep.RETRIEVE_UTTERANCE:
        if parsed.payload is None:
            raise MalformedCorpus(f"cast target for {sample.id!r} lacks an utterance")
        return convo_id, GoldTurn(
            turn_index,
            parsed.intent,
            nextstep,
            candidate_utterances=(parsed.payload,),
            gold_utterance=parsed.payload,
        )
    return convo_id, GoldTurn(turn_index, parsed.intent, nextstep)


def evaluate(
    task: Task,
    samples: Sequence[CastSample],
    predictions: Mapping[str, str],
    cfg: MatchConfig,
):
    """Score predictions against the gold encoded in cast targets.

    Returns (score, per-sample rows). Gold structure is recovered by
    parsing target texts, which the casting grammar round-trips exactly.
    """
    missing = [s.id for s in samples if s.id not in predictions]
    if missing:
        raise MissingPrediction(
            f"{len(missing)} of {len(samples)} ids lack predictions "
            f"(first: {missing[0]!r})"
        )

    rows = []
    if task is Task.WD:
        ems, ces = [], []
        wrong_step = length_mismatch = 0
        for sample in samples:
            gold = _gold_workflow(sample)
            pred = parse_wd(predictions[sample.id])
            em = exact_match(pred, gold, cfg)
            ce = cascading_eval(pred, gold, cfg)
            ems.append(em)
            ces.append(ce)
            if not em:
                if len(pred.steps) != len(gold.steps):
                    length_mismatch += 1
                else:
                    wrong_step += 1
            rows.append(
                {
                    "id": sample.id,
                    "target": sample.target_text,
                    "prediction": predictions[sample.id],
                    "em": em,
                    "ce": round(ce, 4),
                    "pred_len": len(pred.steps),
                    "gold_len": len(gold.steps),
                    "malformed": pred.malformed,
                }
            )
        score = WDScore(
            _mean(ems),
            _mean(ces),
            len(samples),
            {"wrong_step": wrong_step, "length_mismatch": length_mismatch},
        )
        return score, rows

    if task is Task.AST:
        preds, golds = [], []
        for sample in samples:
            gold = parse_ast(sample.target_text)
            pred = parse_ast(predictions[sample.id])
            preds.append(pred)
            golds.append((gold.action, gold.values))
            b_ok, v_ok = _ast_flags(pred, gold.action, gold.values)
            rows.append(
                {
                    "id": sample.id,
                    "target": sample.target_text,
                    "prediction": predictions[sample.id],
                    "b_slot": int(b_ok),
                    "value": int(v_ok),
                    "action": int(b_ok and v_ok),
                }
            )
        return ast_score(preds, golds), rows

    preds, golds, convo_ids = [], [], []
    for position, sample in enumerate(samples):
        convo_id, gold = _gold_turn(sample, position)
        pred = parse_cds(predictions[sample.id])
        preds.append(pred)
        golds.append(gold)
        convo_ids.append(convo_id)
        flags = _cds_turn(pred, gold)
        row = {
            "id": sample.id,
            "target": sample.target_text,
            "prediction": predictions[sample.id],
            "intent": int(flags["intent"]),
            "nextstep": int(flags["nextstep"]),
            "turn_correct": int(flags["turn_correct"]),
        }
        for key in ("b_slot", "value", "recall_at_1"):
            if flags[key] is not None:
                row[key] = int(flags[key])
        rows.append(row)
    return cds_score(preds, golds, convo_ids), rows


def _round4(value: float) -> float:
    return round(value, 4)


def build_report(task: Task, score, config: dict, extra: dict | None = None) -> dict:
    """Assemble the JSON report document, metrics rounded to 4 decimals."""
    if isinstance(score, WDScore):
        metrics = {"em": _round4(score.exact_match), "ce": _round4(score.cascading)}
        counts = {
            "n_samples": score.n_samples,
            "failure_breakdown": dict(score.failure_breakdown),
        }
    elif isinstance(score, ASTScore):
        metrics = {
            "b_slot": _round4(score.b_slot),
            "value": _round4(score.value),
            "action": _round4(score.action),
        }
        counts = {"n_samples": score.n_samples}
    elif isinstance(score, CDSScore):
        metrics = {
            "intent": _round4(score.intent),
            "nextstep": _round4(score.nextstep),
            "b_slot": _round4(score.b_slot),
            "value": _round4(score.value),
            "recall_at_1": _round4(score.recall_at_1),
            "ce": _round4(score.cascading),
        }
        counts = {
            "n_samples": score.n_samples,
            "n_conversations": score.n_conversations,
        }
    else:
        raise TypeError(f"unknown score type {type(score).__name__}")
    doc = {"task": task.value, "metrics": metrics, "config": config}
    doc.update(counts)
    if extra:
        doc.update(extra)
    return doc


def dump_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(doc: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_report(doc))


def write_per_sample(rows: Iterable[dict], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count
