"""Fixtures: clients for both model kinds and a live HTTP server."""

import threading
import time

import pytest
import uvicorn
from fastapi.testclient import TestClient
from sample_data import cast_rows, write_jsonl

from genserver.app import build_app
from genserver.config import ECHO_MODEL, ServeConfig
from genserver.finetune import main as finetune_main


@pytest.fixture(scope="session")
def cast_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.jsonl"
    write_jsonl(cast_rows(), path)
    return path


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory, cast_file):
    out = tmp_path_factory.mktemp("model") / "ckpt"
    code = finetune_main(
        [
            "--train",
            str(cast_file),
            "--task",
            "wd",
            "--epochs",
            "1",
            "--init",
            "tiny",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out


@pytest.fixture(scope="session")
def echo_client():
    return TestClient(build_app(ServeConfig(model=ECHO_MODEL)))


@pytest.fixture(scope="session")
def checkpoint_client(tiny_checkpoint):
    return TestClient(build_app(ServeConfig(model=str(tiny_checkpoint))))


@pytest.fixture
def live_echo_endpoint():
    """A real uvicorn server on a free port, torn down after the test."""
    app = build_app(ServeConfig(model=ECHO_MODEL))
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not come up")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
