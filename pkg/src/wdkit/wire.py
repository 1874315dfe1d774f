"""Wire contract for the generation and scoring HTTP services.

The client in wdkit.inference and wdkit.stepmatch speaks this format; any
server implementation can run its handlers against the canonical vectors
below to prove interoperability without importing the client.

POST /generate   {"ids": [...], "inputs": [...], "max_new_units": int}
              -> {"ids": [...], "outputs": [...]}   (ids echoed, any order)
POST /score      {"texts_a": [...], "texts_b": [...]}
              -> {"scores": [...]}                  (floats, pairwise)
"""

from __future__ import annotations

GENERATE_PATH = "/generate"
SCORE_PATH = "/score"

# request bodies a conformant generation service must accept
GENERATE_VECTORS: tuple[dict, ...] = (
    {"ids": ["a"], "inputs": ["Extract AST: hello"], "max_new_units": 16},
    {
        "ids": ["s1", "s2", "s3"],
        "inputs": [
            "Extract workflow: Dialogue: hi there",
            "Extract AST: my name is Albert sanders",
            "Extract CDS: History: hi Candidates: yes,no",
        ],
        "max_new_units": 256,
    },
    # unicode and empty inputs must not break the wire
    {"ids": ["u-1", "u-2"], "inputs": ["café über alles", ""], "max_new_units": 8},
)

# request bodies a conformant scoring service must accept
SCORE_VECTORS: tuple[dict, ...] = (
    {"texts_a": ["offer a refund"], "texts_b": ["propose a refund"]},
    {
        "texts_a": ["search for a shirt", "same text", ""],
        "texts_b": ["search for a jacket", "same text", "anything"],
    },
)


def check_generate_response(request: dict, response) -> list[str]:
    """Violations of the /generate contract for one request/response pair.

    An empty list means the response is conformant. The ids may come back
    in any order, but each requested id must appear exactly once.
    """
    problems: list[str] = []
    if not isinstance(response, dict):
        return [f"response is {type(response).__name__}, not an object"]
    ids = response.get("ids")
    outputs = response.get("outputs")
    if not isinstance(ids, list):
        problems.append("'ids' missing or not a list")
    if not isinstance(outputs, list):
        problems.append("'outputs' missing or not a list")
    if problems:
        return problems
    if len(ids) != len(outputs):
        problems.append(f"{len(ids)} ids vs {len(outputs)} outputs")
    if sorted(map(str, ids)) != sorted(map(str, request["ids"])):
        problems.append("response ids are not a permutation of request ids")
    for position, output in enumerate(outputs):
        if not isinstance(output, str):
            problems.append(f"outputs[{position}] is {type(output).__name__}, not a string")
    return problems


def check_score_response(request: dict, response) -> list[str]:
    """Violations of the /score contract for one request/response pair."""
    problems: list[str] = []
    if not isinstance(response, dict):
        return [f"response is {type(response).__name__}, not an object"]
    scores = response.get("scores")
    if not isinstance(scores, list):
        return ["'scores' missing or not a list"]
    if len(scores) != len(request["texts_a"]):
        problems.append(f"expected {len(request['texts_a'])} scores, got {len(scores)}")
    for position, score in enumerate(scores):
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            problems.append(f"scores[{position}] is not numeric")
    return problems
