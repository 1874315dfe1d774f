"""Shared fixtures: deterministic corpora and a stub generation service.

The corpus builders are plain functions so individual tests can rebuild or
perturb a document; the session fixtures write them to disk once. The stub
server speaks the /generate and /score wire format with switchable fault
modes and a request log, so client behavior (batching, retries, error
mapping) is observable without any real model behind it.
"""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from wdkit.corpus import load_abcd, load_multiwoz
from wdkit.stepmatch import lexical_provider

# the hand-written dialogue whose cast targets exercise every grammar shape
LITERAL_DIALOGUE_ID = "c000"

_INTENTS = (
    "manage_dispute_bill",
    "request_refund",
    "check_shipping",
    "update_details",
    "ask_policy",
)

_FIRST = ("albert", "joseph", "maria", "chloe", "norman", "sanya", "rodrigo", "akira")
_LAST = ("sanders", "banter", "ortega", "nguyen", "patel", "kim", "fox", "weiss")

# (action name, slot value arity) pool; names come from the builtin domain.
# Arities 0, 1, 2, and 3 are all present so every target shape gets cast.
_ACTIONS = (
    ("pull-up-account", 1),
    ("search-faq", 0),
    ("validate-purchase", 3),
    ("offer-refund", 1),
    ("search-shirt", 0),
    ("search-jacket", 0),
    ("shipping-status", 1),
    ("promo-code", 1),
    ("update-order", 2),
    ("verify-identity", 3),
    ("record-reason", 1),
    ("membership", 1),
    ("try-again", 0),
    ("notify-team", 1),
)

_CANDIDATES = (
    "hello how can I help you today?",
    "let me check that for you",
    "could you give me your account id please",
    "thanks for your patience",
    "is there anything else I can do",
    "I am sorry to hear that",
    "your order is on the way",
    "let me pull up the details",
)

_FILLER = ("ok", "sure thing", "one moment please", "yes that works", "great thanks")


def _person(rng: random.Random) -> str:
    return f"{rng.choice(_FIRST).capitalize()} {rng.choice(_LAST)}"


def _slot_values(rng: random.Random, arity: int) -> list[str]:
    # no commas or semicolons: these land inside delimiter-joined targets
    values = []
    for _ in range(arity):
        kind = rng.randrange(4)
        if kind == 0:
            values.append(_person(rng))
        elif kind == 1:
            values.append(f"{rng.choice(_FIRST)}{rng.randrange(100, 999)}@example.com")
        elif kind == 2:
            values.append(str(rng.randrange(10**9, 10**10)))
        else:
            values.append(f"{rng.choice(_FIRST)}{rng.randrange(100, 999)}")
    return values


def _literal_dialogue() -> dict:
    """Covers a retrieve turn, zero/one/three-value actions, and a close."""
    return {
        "convo_id": LITERAL_DIALOGUE_ID,
        "turns": [
            {"speaker": "customer", "text": "hi i need help with a bill dispute"},
            {
                "speaker": "agent",
                "text": "hello how can I help you today?",
                "targets": ["manage_dispute_bill", "retrieve_utterance", None, [], 0],
                "candidates": [
                    "hello how can I help you today?",
                    "goodbye then",
                    "let me check",
                ],
            },
            {"speaker": "customer", "text": "my name is Albert sanders"},
            {
                "speaker": "action",
                "text": "account lookup",
                "targets": [
                    "manage_dispute_bill",
                    "take_action",
                    "pull-up-account",
                    ["Albert sanders"],
                    -1,
                ],
            },
            {
                "speaker": "action",
                "text": "faq lookup",
                "targets": ["manage_dispute_bill", "take_action", "search-faq", [], -1],
            },
            {
                "speaker": "action",
                "text": "purchase validation",
                "targets": [
                    "manage_dispute_bill",
                    "take_action",
                    "validate-purchase",
                    ["josephbanter975", "josephbanter975@gmail.com", "0626252373"],
                    -1,
                ],
            },
            {
                "speaker": "agent",
                "text": "that is resolved have a nice day",
                "targets": ["manage_dispute_bill", "end_conversation", None, [], -1],
            },
        ],
    }


def _abcd_dialogue(rng: random.Random, idx: int) -> dict:
    intent = rng.choice(_INTENTS)
    turns: list[dict] = [
        {
            "speaker": "customer",
            "text": f"hi I have a problem with order {rng.randrange(1000, 9999)}",
        }
    ]
    cands = list(rng.sample(_CANDIDATES, 4))
    gold_idx = rng.randrange(4)
    turns.append(
        {
            "speaker": "agent",
            "text": cands[gold_idx],
            "targets": [intent, "retrieve_utterance", None, [], gold_idx],
            "candidates": cands,
        }
    )
    actions = [rng.choice(_ACTIONS) for _ in range(rng.randrange(2, 6))]
    if idx % 5 == 2:
        actions.insert(rng.randrange(len(actions) + 1), ("search-shirt", 0))
    if idx % 7 == 3:
        actions.append(actions[0])  # deliberate repeat of a step
    for name, arity in actions:
        if rng.random() < 0.3:
            turns.append({"speaker": "customer", "text": rng.choice(_FILLER)})
        turns.append(
            {
                "speaker": "action",
                "text": f"system ran {name}",
                "targets": [intent, "take_action", name, _slot_values(rng, arity), -1],
            }
        )
    turns.append(
        {
            "speaker": "agent",
            "text": "you are all set goodbye",
            "targets": [intent, "end_conversation", None, [], -1],
        }
    )
    return {"convo_id": f"c{idx:03d}", "turns": turns}


def build_abcd_doc(n_train: int = 56, seed: int = 20260822) -> dict:
    rng = random.Random(seed)
    train = [_literal_dialogue()]
    train += [_abcd_dialogue(rng, i) for i in range(1, n_train + 1)]
    held = random.Random(seed + 1)
    dev = [_abcd_dialogue(held, i) for i in range(200, 208)]
    test = [_abcd_dialogue(held, i) for i in range(300, 310)]
    return {"train": train, "dev": dev, "test": test}


_TRAVEL_INTENTS = (
    "find_hotel",
    "book_hotel",
    "find_train",
    "book_train",
    "find_attraction",
    "find_restaurant",
    "book_restaurant",
    "book_taxi",
)


def _travel_dialogue(rng: random.Random, idx: int, empty: bool = False) -> dict:
    if empty:
        sequence: list[str] = []
    else:
        sequence = []
        while len(sequence) < rng.randrange(1, 4):
            intent = rng.choice(_TRAVEL_INTENTS)
            if not sequence or sequence[-1] != intent:
                sequence.append(intent)
    turns: list[dict] = []
    turn_id = 0
    for intent in sequence or [None]:
        repeats = 1 if intent is None else rng.randrange(1, 3)
        for repeat in range(repeats):
            slot_values: dict = {}
            if intent is not None:
                service = intent.split("_", 1)[1]
                slot_values[f"{service}-area"] = [rng.choice(("north", "south", "centre"))]
                if repeat == repeats - 1:
                    # the final state of a run carries one extra slot
                    slot_values[f"{service}-day"] = [
                        rng.choice(("monday", "friday", "sunday"))
                    ]
            state = {
                "active_intent": "NONE" if intent is None else intent,
                "slot_values": slot_values,
            }
            turns.append(
                {
                    "turn_id": str(turn_id),
                    "speaker": "USER",
                    "utterance": f"looking for something {turn_id}",
                    "frames": [{"service": "any", "state": state}],
                }
            )
            turn_id += 1
            turns.append(
                {
                    "turn_id": str(turn_id),
                    "speaker": "SYSTEM",
                    "utterance": f"sure let me see {turn_id}",
                }
            )
            turn_id += 1
    return {"dialogue_id": f"TRV{idx:04d}.json", "turns": turns}


def build_multiwoz_shards(seed: int = 7) -> dict:
    rng = random.Random(seed)
    train_a = [_travel_dialogue(rng, i) for i in range(8)]
    train_a.append(_travel_dialogue(rng, 98, empty=True))
    train_b = [_travel_dialogue(rng, i) for i in range(10, 16)]
    train_b.append(_travel_dialogue(rng, 99, empty=True))
    dev = [_travel_dialogue(rng, i) for i in range(20, 24)]
    test = [_travel_dialogue(rng, i) for i in range(30, 35)]
    return {"train": [train_a, train_b], "dev": [dev], "test": [test]}


@pytest.fixture(scope="session")
def abcd_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("abcd") / "corpus.json"
    path.write_text(json.dumps(build_abcd_doc()), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def abcd_corpus(abcd_path):
    return load_abcd(abcd_path, "train")


@pytest.fixture(scope="session")
def multiwoz_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("travel")
    for split, shards in build_multiwoz_shards().items():
        split_dir = root / split
        split_dir.mkdir()
        for index, shard in enumerate(shards):
            shard_path = split_dir / f"dialogues_{index:03d}.json"
            shard_path.write_text(json.dumps(shard), encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def multiwoz_corpus(multiwoz_dir):
    return load_multiwoz(multiwoz_dir, "train", include_values=True)


class StubState:
    """Mutable knobs and observations for one stub server instance."""

    def __init__(self) -> None:
        self.endpoint = ""
        self.outputs: dict[str, str] = {}  # id -> canned generation
        self.default_output = "AST: none"
        self.fail_next = 0  # serve this many 500s before behaving
        self.mode = "ok"  # ok | reversed | wrong_ids | short | bad_json | non200
        self.requests: list[tuple[str, dict]] = []
        self.lock = threading.Lock()

    def generate_requests(self) -> list[dict]:
        with self.lock:
            return [body for path, body in self.requests if path == "/generate"]


class _StubHandler(BaseHTTPRequestHandler):
    state: StubState

    def log_message(self, *args) -> None:  # keep test output clean
        pass

    def _reply(self, code: int, payload=None, raw: bytes | None = None) -> None:
        body = raw if raw is not None else json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:
        state = self.state
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            body = {}
        with state.lock:
            state.requests.append((self.path, body))
            if state.fail_next > 0:
                state.fail_next -= 1
                self._reply(500, {"error": "transient"})
                return
            mode = state.mode
        if mode == "non200":
            self._reply(403, {"error": "forbidden"})
            return
        if mode == "bad_json":
            self._reply(200, raw=b"this is not json")
            return
        if self.path == "/generate":
            ids = [str(i) for i in body.get("ids", [])]
            outputs = [state.outputs.get(i, state.default_output) for i in ids]
            if mode == "reversed":
                ids, outputs = ids[::-1], outputs[::-1]
            elif mode == "wrong_ids":
                ids = [f"bogus-{n}" for n in range(len(ids))]
            elif mode == "short" and outputs:
                outputs = outputs[:-1]
            self._reply(200, {"ids": ids, "outputs": outputs})
        elif self.path == "/score":
            provider = lexical_provider()
            texts_a = body.get("texts_a", [])
            texts_b = body.get("texts_b", [])
            scores = [provider.score(a, b) for a, b in zip(texts_a, texts_b)]
            self._reply(200, {"scores": scores})
        else:
            self._reply(404, {"error": "no such path"})


@pytest.fixture
def stub_backend():
    state = StubState()
    handler = type("BoundStubHandler", (_StubHandler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    state.endpoint = f"http://127.0.0.1:{server.server_address[1]}"
    yield state
    server.shutdown()
    thread.join(timeout=5)
