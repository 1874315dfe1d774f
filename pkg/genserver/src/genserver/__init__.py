"""Reference serving process for the generation and scoring wire format."""

from genserver.app import build_app
from genserver.config import ECHO_MODEL, ServeConfig
from genserver.models import CheckpointModel, EchoModel, build_model
from genserver.scoring import greedy_match_score

__all__ = [
    "ECHO_MODEL",
    "CheckpointModel",
    "EchoModel",
    "ServeConfig",
    "build_app",
    "build_model",
    "greedy_match_score",
]
