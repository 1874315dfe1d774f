"""HTTP service for generation and similarity scoring.

POST /generate   {"ids": [...], "inputs": [...], "max_new_units": int}
              -> {"ids": [...], "outputs": [...], "truncated": [...]}
POST /score      {"texts_a": [...], "texts_b": [...]}
              -> {"scores": [...]}

Malformed bodies get a 400 with the problem spelled out; a model failure
gets a 500. Requests may arrive concurrently but model access is
serialized, so responses are id-aligned and a fixed checkpoint always
greedy-decodes the same output for the same input.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from genserver.config import ServeConfig
from genserver.models import build_model
from genserver.scoring import greedy_match_score


def _string_list(value) -> bool:
    return isinstance(value, list) and all(isinstance(item, str) for item in value)


def _generate_problems(payload) -> str | None:
    if not isinstance(payload, dict):
        return "body is not a JSON object"
    if not isinstance(payload.get("ids"), list):
        return "'ids' must be a list"
    if not _string_list(payload.get("inputs")):
        return "'inputs' must be a list of strings"
    if len(payload["ids"]) != len(payload["inputs"]):
        return f"{len(payload['ids'])} ids vs {len(payload['inputs'])} inputs"
    units = payload.get("max_new_units")
    if units is not None and (
        isinstance(units, bool) or not isinstance(units, int) or units < 1
    ):
        return "'max_new_units' must be a positive integer"
    return None


def _score_problems(payload) -> str | None:
    if not isinstance(payload, dict):
        return "body is not a JSON object"
    for key in ("texts_a", "texts_b"):
        if not _string_list(payload.get(key)):
            return f"'{key}' must be a list of strings"
    if len(payload["texts_a"]) != len(payload["texts_b"]):
        return "'texts_a' and 'texts_b' differ in length"
    return None


async def _json_body(request: Request):
    try:
        return await request.json()
    except Exception:
        return None


def build_app(cfg: ServeConfig) -> FastAPI:
    model = build_model(cfg)
    lock = threading.Lock()
    app = FastAPI(title="genserver")

    @app.post("/generate")
    async def generate(request: Request):
        payload = await _json_body(request)
        problem = _generate_problems(payload)
        if problem:
            return JSONResponse({"error": problem}, status_code=400)
        units = payload.get("max_new_units") or cfg.max_target_length
        try:
            with lock:
                outputs, flags = model.generate(payload["inputs"], units)
        except Exception as exc:  # surfaced to the client, not swallowed
            return JSONResponse({"error": f"model failure: {exc}"}, status_code=500)
        truncated = [i for i, flagged in zip(payload["ids"], flags) if flagged]
        return {"ids": payload["ids"], "outputs": outputs, "truncated": truncated}

    @app.post("/score")
    async def score(request: Request):
        payload = await _json_body(request)
        problem = _score_problems(payload)
        if problem:
            return JSONResponse({"error": problem}, status_code=400)
        try:
            with lock:
                scores = [
                    greedy_match_score(
                        model.token_embeddings(a), model.token_embeddings(b)
                    )
                    for a, b in zip(payload["texts_a"], payload["texts_b"])
                ]
        except Exception as exc:
            return JSONResponse({"error": f"model failure: {exc}"}, status_code=500)
        return {"scores": scores}

    return app
