"""Dialogue corpus model and loaders.

Two adapter formats are supported. The agent-assistance format (ABCD-style)
is a JSON document of per-split conversation lists whose annotated turns
carry a five-field targets tuple; those turns become gold turns and the
take_action ones define the gold workflow. The travel-booking format
(MultiWOZ-2.2-style) stores dialogues whose user turns carry per-service
active intents; consecutive repeats of an intent collapse into a single
workflow step.

Loaded corpora are immutable. Structural problems that cannot be tolerated
raise MalformedCorpus with the path of the offending record; everything
tolerable is recorded as a Diagnostic on the corpus instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from wdkit.errors import MalformedCorpus, UnknownSplit
from wdkit.stepmatch import MISSING_STEP, normalize


class Speaker(str, Enum):
    CUSTOMER = "customer"
    AGENT = "agent"
    ACTION = "action"
    SYSTEM = "system"


class NextStep(str, Enum):
    RETRIEVE_UTTERANCE = "retrieve_utterance"
    TAKE_ACTION = "take_action"
    END_CONVERSATION = "end_conversation"


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("utterance text is empty")


@dataclass(frozen=True)
class GoldTurn:
    """Per-turn annotation: intent, next step, and the step's payload.

    action_name is present exactly for take_action turns, and
    candidate_utterances are non-empty exactly for retrieve_utterance turns.
    """

    turn_index: int
    intent: str | None
    nextstep: NextStep | None
    action_name: str | None = None
    action_values: tuple[str, ...] = ()
    candidate_utterances: tuple[str, ...] = ()
    gold_utterance: str | None = None

    def __post_init__(self) -> None:
        if self.turn_index < 0:
            raise ValueError(f"turn_index {self.turn_index} is negative")
        has_action = self.action_name is not None
        if has_action != (self.nextstep is NextStep.TAKE_ACTION):
            raise ValueError("action_name is required exactly for take_action turns")
        has_candidates = len(self.candidate_utterances) > 0
        if has_candidates != (self.nextstep is NextStep.RETRIEVE_UTTERANCE):
            raise ValueError(
                "candidate_utterances are required exactly for retrieve_utterance turns"
            )


@dataclass(frozen=True)
class WorkflowStep:
    name: str
    description: str
    values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("workflow step name is empty")
        if not self.description:
            raise ValueError("workflow step description is empty")


@dataclass(frozen=True)
class Workflow:
    """Steps in the exact order they occurred; duplicates allowed."""

    steps: tuple[WorkflowStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def step_names(self) -> tuple[str, ...]:
        return tuple(step.name for step in self.steps)


@dataclass(frozen=True)
class StepDomain:
    """The allowable (name, description) pairs for one dataset."""

    entries: tuple[tuple[str, str], ...]
    dataset_tag: str

    def __post_init__(self) -> None:
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate step names in domain {self.dataset_tag!r}")
        descriptions = [desc for _, desc in self.entries]
        if len(set(descriptions)) != len(descriptions):
            raise ValueError(
                f"duplicate step descriptions in domain {self.dataset_tag!r}"
            )
        sentinel = normalize(MISSING_STEP)
        for _, desc in self.entries:
            if normalize(desc) == sentinel:
                raise ValueError(
                    f"description {desc!r} collides with the padding sentinel"
                )

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def descriptions(self) -> tuple[str, ...]:
        return tuple(desc for _, desc in self.entries)

    def description_for(self, name: str) -> str | None:
        for entry_name, description in self.entries:
            if entry_name == name:
                return description
        return None


@dataclass(frozen=True)
class Diagnostic:
    code: str
    detail: str


@dataclass(frozen=True)
class Dialogue:
    id: str
    utterances: tuple[Utterance, ...]
    gold_turns: tuple[GoldTurn, ...] = ()
    gold_workflow: Workflow | None = None

    def __post_init__(self) -> None:
        previous = -1
        for turn in self.gold_turns:
            if turn.turn_index <= previous:
                raise ValueError(
                    f"dialogue {self.id!r}: gold turn indices not strictly increasing"
                )
            if turn.turn_index >= len(self.utterances):
                raise ValueError(
                    f"dialogue {self.id!r}: gold turn index {turn.turn_index} "
                    f"outside {len(self.utterances)} utterances"
                )
            previous = turn.turn_index


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[Dialogue, ...]
    domain: StepDomain
    split_tag: Split
    diagnostics: tuple[Diagnostic, ...] = ()

    def __len__(self) -> int:
        return len(self.dialogues)


def parse_split(value: str | Split) -> Split:
    if isinstance(value, Split):
        return value
    try:
        return Split(str(value).lower())
    except ValueError:
        expected = ", ".join(s.value for s in Split)
        raise UnknownSplit(f"unknown split {value!r} (expected one of: {expected})")


def derive_workflow(
    dialogue: Dialogue,
    domain: StepDomain,
    diagnostics: list[Diagnostic] | None = None,
) -> Workflow:
    """One step per take_action gold turn, in turn order.

    Names outside the domain are kept with the raw name doubling as the
    description, and flagged so out-of-distribution runs stay expressible.
    """
    steps = []
    for turn in dialogue.gold_turns:
        if turn.nextstep is not NextStep.TAKE_ACTION:
            continue
        assert turn.action_name is not None
        description = domain.description_for(turn.action_name)
        if description is None:
            description = turn.action_name
            if diagnostics is not None:
                diagnostics.append(
                    Diagnostic(
                        "out_of_domain_step",
                        f"dialogue {dialogue.id}: {turn.action_name}",
                    )
                )
        steps.append(WorkflowStep(turn.action_name, description, turn.action_values))
    return Workflow(tuple(steps))


def _corpus_error(where: str, message: str) -> MalformedCorpus:
    return MalformedCorpus(f"{where}: {message}")


def _read_json(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedCorpus(f"{path}: invalid JSON ({exc})") from exc


_SPEAKERS = {
    "customer": Speaker.CUSTOMER,
    "user": Speaker.CUSTOMER,
    "agent": Speaker.AGENT,
    "action": Speaker.ACTION,
    "system": Speaker.SYSTEM,
}


def _parse_speaker(where: str, raw) -> Speaker:
    if isinstance(raw, str):
        speaker = _SPEAKERS.get(raw.lower())
        if speaker is not None:
            return speaker
    raise _corpus_error(where, f"unknown speaker {raw!r}")


def _utterance(where: str, speaker: Speaker, text) -> Utterance:
    if not isinstance(text, str):
        raise _corpus_error(where, f"text is not a string: {text!r}")
    try:
        return Utterance(speaker, text)
    except ValueError as exc:
        raise _corpus_error(where, str(exc))


def _unpack_abcd_turn(where: str, turn, diagnostics: list[Diagnostic]):
    if isinstance(turn, dict):
        for key in sorted(turn.keys() - {"speaker", "text", "targets", "candidates"}):
            diagnostics.append(Diagnostic("unknown_field", f"{where}.{key}"))
        if "speaker" not in turn:
            raise _corpus_error(where, "missing 'speaker'")
        if "text" not in turn:
            raise _corpus_error(where, "missing 'text'")
        return turn["speaker"], turn["text"], turn.get("targets"), turn.get("candidates")
    if isinstance(turn, list) and len(turn) == 2:
        return turn[0], turn[1], None, None
    raise _corpus_error(where, "turn is neither an object nor a [speaker, text] pair")


def _parse_targets(
    where: str,
    turn_index: int,
    targets,
    candidates,
    diagnostics: list[Diagnostic],
) -> GoldTurn | None:
    if not isinstance(targets, list) or len(targets) != 5:
        raise _corpus_error(
            where, "targets must be [intent, nextstep, action, values, candidate-index]"
        )
    intent_raw, nextstep_raw, action, values, cand_index = targets
    if nextstep_raw is None:
        return None
    try:
        nextstep = NextStep(nextstep_raw)
    except ValueError:
        diagnostics.append(Diagnostic("unknown_nextstep", f"{where}: {nextstep_raw!r}"))
        return None
    intent = None if intent_raw is None else str(intent_raw)
    if nextstep is NextStep.TAKE_ACTION:
        if not action or not isinstance(action, str):
            raise _corpus_error(where, "take_action turn without an action name")
        if values is None:
            values = []
        if not isinstance(values, list):
            raise _corpus_error(where, f"action values are not a list: {values!r}")
        return GoldTurn(
            turn_index,
            intent,
            nextstep,
            action_name=action,
            action_values=tuple(str(v) for v in values),
        )
    if nextstep is NextStep.RETRIEVE_UTTERANCE:
        if not isinstance(candidates, list) or not candidates:
            raise _corpus_error(where, "retrieve_utterance turn without candidates")
        cands = tuple(str(c) for c in candidates)
        if not isinstance(cand_index, int) or not 0 <= cand_index < len(cands):
            raise _corpus_error(
                where, f"candidate index {cand_index!r} outside {len(cands)} candidates"
            )
        return GoldTurn(
            turn_index,
            intent,
            nextstep,
            candidate_utterances=cands,
            gold_utterance=cands[cand_index],
        )
    return GoldTurn(turn_index, intent, nextstep)


def _parse_abcd_conversation(
    where: str,
    convo,
    domain: StepDomain,
    diagnostics: list[Diagnostic],
) -> Dialogue:
    if not isinstance(convo, dict):
        raise _corpus_error(where, "conversation is not an object")
    convo_id = convo.get("convo_id", convo.get("id"))
    if convo_id is None:
        raise _corpus_error(where, "missing 'convo_id'")
    turns = convo.get("turns", convo.get("delexed"))
    if not isinstance(turns, list):
        raise _corpus_error(where, "missing 'turns' list")
    known = {"convo_id", "id", "turns", "delexed"}
    for key in sorted(convo.keys() - known):
        diagnostics.append(Diagnostic("unknown_field", f"{where}.{key}"))

    utterances: list[Utterance] = []
    gold_turns: list[GoldTurn] = []
    for turn_index, turn in enumerate(turns):
        turn_where = f"{where}.turns[{turn_index}]"
        speaker_raw, text, targets, candidates = _unpack_abcd_turn(
            turn_where, turn, diagnostics
        )
        speaker = _parse_speaker(turn_where, speaker_raw)
        utterances.append(_utterance(turn_where, speaker, text))
        if targets is not None:
            gold = _parse_targets(turn_where, turn_index, targets, candidates, diagnostics)
            if gold is not None:
                gold_turns.append(gold)
    try:
        dialogue = Dialogue(str(convo_id), tuple(utterances), tuple(gold_turns))
    except ValueError as exc:
        raise _corpus_error(where, str(exc))
    workflow = derive_workflow(dialogue, domain, diagnostics)
    return replace(dialogue, gold_workflow=workflow)


def load_abcd(
    path: str | Path,
    split: str | Split,
    domain: StepDomain | None = None,
) -> Corpus:
    """Load an agent-assistance corpus for one split.

    The document is either an object of per-split conversation lists or a
    bare list (served as whichever split was requested).
    """
    split = parse_split(split)
    if domain is None:
        from wdkit.domains import builtin_domain

        domain = builtin_domain("abcd")
    raw = _read_json(path)
    if isinstance(raw, dict):
        if split.value not in raw:
            available = ", ".join(sorted(raw)) or "none"
            raise UnknownSplit(f"{path}: no {split.value!r} split (has: {available})")
        conversations = raw[split.value]
    elif isinstance(raw, list):
        conversations = raw
    else:
        raise MalformedCorpus(f"{path}: expected an object of split lists or a list")
    if not isinstance(conversations, list):
        raise MalformedCorpus(f"{path}: split {split.value!r} is not a list")

    diagnostics: list[Diagnostic] = []
    dialogues = tuple(
        _parse_abcd_conversation(f"{split.value}[{index}]", convo, domain, diagnostics)
        for index, convo in enumerate(conversations)
    )
    return Corpus(dialogues, domain, split, tuple(diagnostics))


def _multiwoz_files(path: str | Path, split: Split) -> list[Path]:
    root = Path(path)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise FileNotFoundError(f"no such file or directory: {root}")
    split_dir = root / split.value
    if split_dir.is_dir():
        files = sorted(split_dir.glob("*.json"))
        if not files:
            raise MalformedCorpus(f"{split_dir}: no .json files")
        return files
    if any((root / s.value).is_dir() for s in Split):
        raise UnknownSplit(f"{root}: no {split.value!r} directory")
    files = sorted(root.glob("*.json"))
    if not files:
        raise MalformedCorpus(f"{root}: no .json files")
    return files


def _state_values(state: dict) -> tuple[str, ...]:
    slot_values = state.get("slot_values")
    if not isinstance(slot_values, dict):
        return ()
    values = []
    for slot in sorted(slot_values):
        slot_list = slot_values[slot]
        if isinstance(slot_list, list) and slot_list:
            values.append(str(slot_list[0]))
    return tuple(values)


def _parse_multiwoz_dialogue(
    where: str,
    record,
    domain: StepDomain,
    include_values: bool,
    diagnostics: list[Diagnostic],
) -> Dialogue:
    if not isinstance(record, dict):
        raise _corpus_error(where, "dialogue is not an object")
    dlg_id = record.get("dialogue_id", record.get("id"))
    if dlg_id is None:
        raise _corpus_error(where, "missing 'dialogue_id'")
    turns = record.get("turns")
    if not isinstance(turns, list):
        raise _corpus_error(where, "missing 'turns' list")

    utterances: list[Utterance] = []
    # flattened stream of (intent, state) from user turns, in turn order
    intent_stream: list[tuple[str, dict]] = []
    for turn_index, turn in enumerate(turns):
        turn_where = f"{where}.turns[{turn_index}]"
        if not isinstance(turn, dict):
            raise _corpus_error(turn_where, "turn is not an object")
        if "speaker" not in turn:
            raise _corpus_error(turn_where, "missing 'speaker'")
        if "utterance" not in turn:
            raise _corpus_error(turn_where, "missing 'utterance'")
        speaker = _parse_speaker(turn_where, turn["speaker"])
        utterances.append(_utterance(turn_where, speaker, turn["utterance"]))
        if speaker is not Speaker.CUSTOMER:
            continue
        frames = turn.get("frames", [])
        if not isinstance(frames, list):
            raise _corpus_error(turn_where, "'frames' is not a list")
        for frame in frames:
            state = frame.get("state") if isinstance(frame, dict) else None
            if not isinstance(state, dict):
                continue
            intent = state.get("active_intent")
            if not intent or intent == "NONE":
                continue
            intent_stream.append((str(intent), state))

    # collapse consecutive repeats; a re-activation after a different intent
    # starts a new occurrence, and the run keeps its final state
    runs: list[tuple[str, dict]] = []
    for intent, state in intent_stream:
        if runs and runs[-1][0] == intent:
            runs[-1] = (intent, state)
        else:
            runs.append((intent, state))

    steps = []
    for intent, state in runs:
        description = domain.description_for(intent)
        if description is None:
            description = intent
            diagnostics.append(
                Diagnostic("out_of_domain_step", f"dialogue {dlg_id}: {intent}")
            )
        values = _state_values(state) if include_values else ()
        steps.append(WorkflowStep(intent, description, values))
    if not steps:
        diagnostics.append(Diagnostic("empty_workflow", f"dialogue {dlg_id}"))
    return Dialogue(str(dlg_id), tuple(utterances), (), Workflow(tuple(steps)))


def load_multiwoz(
    path: str | Path,
    split: str | Split,
    domain: StepDomain | None = None,
    include_values: bool = False,
) -> Corpus:
    """Load a travel-booking corpus for one split.

    path may be a single JSON file, a directory of shard files, or a
    directory with train/dev/test subdirectories.
    """
    split = parse_split(split)
    if domain is None:
        from wdkit.domains import builtin_domain

        domain = builtin_domain("multiwoz_modified")
    diagnostics: list[Diagnostic] = []
    dialogues: list[Dialogue] = []
    for file in _multiwoz_files(path, split):
        raw = _read_json(file)
        if not isinstance(raw, list):
            raise MalformedCorpus(f"{file}: expected a list of dialogues")
        for index, record in enumerate(raw):
            dialogues.append(
                _parse_multiwoz_dialogue(
                    f"{file.name}[{index}]", record, domain, include_values, diagnostics
                )
            )
    return Corpus(tuple(dialogues), domain, split, tuple(diagnostics))


def dialogue_to_dict(dialogue: Dialogue) -> dict:
    workflow = None
    if dialogue.gold_workflow is not None:
        workflow = [
            {"name": s.name, "description": s.description, "values": list(s.values)}
            for s in dialogue.gold_workflow.steps
        ]
    return {
        "id": dialogue.id,
        "utterances": [
            {"speaker": u.speaker.value, "text": u.text} for u in dialogue.utterances
        ],
        "gold_turns": [
            {
                "turn_index": t.turn_index,
                "intent": t.intent,
                "nextstep": None if t.nextstep is None else t.nextstep.value,
                "action_name": t.action_name,
                "action_values": list(t.action_values),
                "candidate_utterances": list(t.candidate_utterances),
                "gold_utterance": t.gold_utterance,
            }
            for t in dialogue.gold_turns
        ],
        "gold_workflow": workflow,
    }


def domain_to_dict(domain: StepDomain) -> dict:
    return {
        "dataset_tag": domain.dataset_tag,
        "entries": [[name, desc] for name, desc in domain.entries],
    }


def dump_dialogues(corpus: Corpus, path: str | Path) -> int:
    """Write one dialogue object per line; returns the row count."""
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in corpus.dialogues:
            fh.write(json.dumps(dialogue_to_dict(dialogue), ensure_ascii=False) + "\n")
    return len(corpus.dialogues)
