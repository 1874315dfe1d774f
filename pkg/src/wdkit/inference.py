"""Generation backends: remote HTTP service, gold oracle, and file replay.

All three answer a GenRequest with outputs aligned to the request ids, so
the rest of the pipeline never cares where text came from.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import requests

from wdkit.errors import (
    BackendTimeout,
    MalformedResponse,
    MissingPrediction,
    UnknownId,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenRequest:
    ids: tuple[str, ...]
    inputs: tuple[str, ...]
    max_new_units: int = 256

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.inputs):
            raise ValueError(f"{len(self.ids)} ids vs {len(self.inputs)} inputs")
        if self.max_new_units <= 0:
            raise ValueError("max_new_units must be positive")


@dataclass(frozen=True)
class GenResponse:
    ids: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.outputs):
            raise ValueError(f"{len(self.ids)} ids vs {len(self.outputs)} outputs")


@dataclass(frozen=True)
class GenLimits:
    batch_size: int = 16
    max_in_flight: int = 2
    timeout: float = 60.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.max_in_flight < 1:
            raise ValueError("batch_size and max_in_flight must be at least 1")
        if self.retries < 0:
            raise ValueError("retries cannot be negative")


def _post_batch(
    session: requests.Session,
    url: str,
    ids: Sequence[str],
    inputs: Sequence[str],
    max_new_units: int,
    limits: GenLimits,
) -> dict[str, str]:
    body = {"ids": list(ids), "inputs": list(inputs), "max_new_units": max_new_units}
    last_error: Exception | None = None
    for attempt in range(limits.retries + 1):
        if attempt:
            time.sleep(0.5 * 2 ** (attempt - 1))
            logger.info("retrying batch of %d (attempt %d)", len(ids), attempt + 1)
        try:
            resp = session.post(url, json=body, timeout=limits.timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code >= 500:
            last_error = MalformedResponse(f"{url}: HTTP {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise MalformedResponse(f"{url}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise MalformedResponse(f"{url}: body is not JSON") from exc
        if not isinstance(payload, dict):
            raise MalformedResponse(f"{url}: body is not an object")
        out_ids = payload.get("ids")
        outputs = payload.get("outputs")
        if not isinstance(out_ids, list) or not isinstance(outputs, list):
            raise MalformedResponse(f"{url}: missing 'ids'/'outputs' lists")
        if len(out_ids) != len(outputs) or len(outputs) != len(ids):
            raise MalformedResponse(
                f"{url}: sent {len(ids)} inputs, got {len(outputs)} outputs"
            )
        by_id = {str(i): str(o) for i, o in zip(out_ids, outputs)}
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise MalformedResponse(f"{url}: response lacks id {missing[0]!r}")
        return by_id
    raise BackendTimeout(
        f"{url}: batch of {len(ids)} failed after {limits.retries + 1} attempts "
        f"({last_error})"
    )


def generate_http(
    endpoint: str, req: GenRequest, limits: GenLimits | None = None
) -> GenResponse:
    """Batched generation over the wire; outputs restored to request order."""
    if limits is None:
        limits = GenLimits()
    url = endpoint.rstrip("/") + "/generate"
    session = requests.Session()
    batches = [
        (req.ids[i : i + limits.batch_size], req.inputs[i : i + limits.batch_size])
        for i in range(0, len(req.ids), limits.batch_size)
    ]
    combined: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=limits.max_in_flight) as pool:
        futures = [
            pool.submit(
                _post_batch, session, url, ids, inputs, req.max_new_units, limits
            )
            for ids, inputs in batches
        ]
        for future in futures:
            combined.update(future.result())
    return GenResponse(req.ids, tuple(combined[i] for i in req.ids))


def oracle_map(samples: Iterable) -> dict[str, str]:
    """id -> gold target text, for use with generate_oracle."""
    return {sample.id: sample.target_text for sample in samples}


def generate_oracle(targets: Mapping[str, str], req: GenRequest) -> GenResponse:
    outputs = []
    for sample_id in req.ids:
        if sample_id not in targets:
            raise UnknownId(f"no gold target for id {sample_id!r}")
        outputs.append(targets[sample_id])
    return GenResponse(req.ids, tuple(outputs))


def read_predictions_jsonl(path: str | Path) -> dict[str, str]:
    """Load {"id", "prediction"} rows; duplicate ids resolve to the last."""
    predictions: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedResponse(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            if not isinstance(row, dict) or "id" not in row or "prediction" not in row:
                raise MalformedResponse(
                    f"{path}:{line_no}: expected an object with 'id' and 'prediction'"
                )
            sample_id = str(row["id"])
            if sample_id in predictions:
                logger.warning(
                    "%s:%d: duplicate id %r, keeping the later row",
                    path,
                    line_no,
                    sample_id,
                )
            predictions[sample_id] = str(row["prediction"])
    return predictions


def generate_replay(path: str | Path, req: GenRequest) -> GenResponse:
    predictions = read_predictions_jsonl(path)
    outputs = []
    for sample_id in req.ids:
        if sample_id not in predictions:
            raise MissingPrediction(f"{path} has no prediction for id {sample_id!r}")
        outputs.append(predictions[sample_id])
    return GenResponse(req.ids, tuple(outputs))


def write_predictions_jsonl(
    ids: Sequence[str], outputs: Sequence[str], path: str | Path
) -> int:
    if len(ids) != len(outputs):
        raise ValueError(f"{len(ids)} ids vs {len(outputs)} outputs")
    with open(path, "w", encoding="utf-8") as fh:
        for sample_id, output in zip(ids, outputs):
            row = {"id": sample_id, "prediction": output}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return len(ids)
