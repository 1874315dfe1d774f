"""Serving configuration."""

from __future__ import annotations

from dataclasses import dataclass

# selects the built-in verbatim test double instead of a checkpoint
ECHO_MODEL = "echo"


@dataclass(frozen=True)
class ServeConfig:
    """What to serve and how much of each text to keep.

    model is a checkpoint directory (or ECHO_MODEL) and is always chosen
    by the operator; there is no default identifier.
    """

    model: str
    max_source_length: int = 2048
    max_target_length: int = 256
    device: str = "cpu"
    batch_size: int = 8
    beam_width: int = 1

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("a model identifier is required")
        for name in ("max_source_length", "max_target_length", "batch_size", "beam_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
