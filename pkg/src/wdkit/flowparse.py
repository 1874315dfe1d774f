"""Parse generated text back into task structures.

These parsers are total: any unicode string yields a result, with a
malformed flag instead of an exception. Prefixes are optional and matched
case-insensitively, since models sometimes drop or re-case them. Pieces are
whitespace-trimmed, so "desc: v" and "desc:v" parse the same way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from wdkit.corpus import NextStep
from wdkit.stepmatch import MISSING_STEP
from wdkit.taskcast import Task

_WD_PREFIX = re.compile(r"^\s*flow\s*:\s*", re.IGNORECASE)
_AST_PREFIX = re.compile(r"^\s*ast\s*:\s*", re.IGNORECASE)
_CDS_PREFIX = re.compile(r"^\s*cds\s*:\s*", re.IGNORECASE)


@dataclass(frozen=True)
class ParsedWD:
    steps: tuple[tuple[str, tuple[str, ...]], ...]
    malformed: bool = False


@dataclass(frozen=True)
class ParsedAST:
    action: str
    values: tuple[str, ...]
    malformed: bool = False


@dataclass(frozen=True)
class ParsedCDS:
    intent: str
    nextstep: str
    payload: str | None
    malformed: bool = False


def parse_wd(text: str) -> ParsedWD:
    """Steps split on ",", then description vs ";"-joined values on the
    first ":". Unseen descriptions survive verbatim (modulo outer trim)."""
    match = _WD_PREFIX.match(text)
    remainder = text[match.end() :] if match else text
    steps = []
    for item in remainder.split(","):
        item = item.strip()
        if not item:
            continue
        description, sep, value_part = item.partition(":")
        description = description.strip()
        if not description:
            continue
        if sep:
            values = tuple(v.strip() for v in value_part.split(";") if v.strip())
        else:
            values = ()
        steps.append((description, values))
    # an explicit prefix with nothing after it is a legitimate empty flow
    malformed = not steps and (match is None or bool(remainder.strip()))
    return ParsedWD(tuple(steps), malformed)


def parse_ast(text: str) -> ParsedAST:
    match = _AST_PREFIX.match(text)
    remainder = (text[match.end() :] if match else text).strip()
    action, sep, value_part = remainder.partition(":")
    action = action.strip()
    if sep:
        values = tuple(v.strip() for v in value_part.split(",") if v.strip())
    else:
        values = ()
    if not action:
        # empty action: substitute the sentinel, which no gold action names
        return ParsedAST(MISSING_STEP, values, malformed=True)
    return ParsedAST(action, values)


def parse_cds(text: str) -> ParsedCDS:
    """At most two splits, so utterance payloads keep their commas."""
    match = _CDS_PREFIX.match(text)
    remainder = (text[match.end() :] if match else text).strip()
    fields = remainder.split(",", 2)
    if len(fields) < 2:
        return ParsedCDS(remainder, "", None, malformed=True)
    intent = fields[0].strip()
    nextstep = fields[1].strip()
    payload = fields[2].strip() if len(fields) == 3 else None
    if nextstep.lower() == NextStep.END_CONVERSATION.value:
        payload = None
        return ParsedCDS(intent, nextstep, payload)
    return ParsedCDS(intent, nextstep, payload, malformed=payload is None)


def parse_prediction(task: Task, text: str):
    if task is Task.WD:
        return parse_wd(text)
    if task is Task.AST:
        return parse_ast(text)
    return parse_cds(text)


def parsed_to_dict(parsed) -> dict:
    if isinstance(parsed, ParsedWD):
        return {
            "steps": [[desc, list(values)] for desc, values in parsed.steps],
            "malformed": parsed.malformed,
        }
    if isinstance(parsed, ParsedAST):
        return {
            "action": parsed.action,
            "values": list(parsed.values),
            "malformed": parsed.malformed,
        }
    return {
        "intent": parsed.intent,
        "nextstep": parsed.nextstep,
        "payload": parsed.payload,
        "malformed": parsed.malformed,
    }
