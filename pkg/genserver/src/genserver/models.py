"""Text models behind the serving endpoints.

Both implementations expose the same two methods: generate() decodes one
output per input and reports which inputs were truncated to the source
budget, token_embeddings() maps a text to a (tokens, dim) matrix for the
similarity endpoint.
"""

from __future__ import annotations

import zlib
from typing import Protocol, Sequence

import numpy as np

from genserver.config import ECHO_MODEL, ServeConfig

_ECHO_DIM = 64


class TextModel(Protocol):
    def generate(
        self, texts: Sequence[str], max_new_units: int
    ) -> tuple[list[str], list[bool]]: ...

    def token_embeddings(self, text: str) -> np.ndarray: ...


class EchoModel:
    """Test double: returns inputs verbatim, one unit = one whitespace token.

    Embeddings are hashed character trigrams, so they are deterministic
    across processes and identical texts always score 1.0.
    """

    def __init__(self, cfg: ServeConfig) -> None:
        self.cfg = cfg

    def generate(
        self, texts: Sequence[str], max_new_units: int
    ) -> tuple[list[str], list[bool]]:
        outputs = []
        truncated = []
        for text in texts:
            units = text.split()
            if len(units) > self.cfg.max_source_length:
                outputs.append(" ".join(units[: self.cfg.max_source_length]))
                truncated.append(True)
            else:
                outputs.append(text)
                truncated.append(False)
        return outputs, truncated

    def token_embeddings(self, text: str) -> np.ndarray:
        tokens = text.split()
        matrix = np.zeros((len(tokens), _ECHO_DIM))
        for row, token in enumerate(tokens):
            padded = f"#{token.lower()}#"
            for start in range(len(padded) - 2):
                trigram = padded[start : start + 3].encode("utf-8")
                matrix[row, zlib.crc32(trigram) % _ECHO_DIM] += 1.0
        return matrix


class CheckpointModel:
    """Greedy decoding from a local encoder-decoder checkpoint directory."""

    def __init__(self, cfg: ServeConfig) -> None:
        # heavyweight imports stay out of the echo path
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
        self.cfg = cfg
        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.model)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(cfg.model)
        self.model.to(cfg.device)
        self.model.eval()

    def _encode(self, text: str) -> tuple[list[int], bool]:
        # inputs always end with eos, so even "" encodes to one token
        ids = self.tokenizer(text, add_special_tokens=False)["input_ids"]
        budget = self.cfg.max_source_length - 1
        flagged = len(ids) > budget
        return ids[:budget] + [self.tokenizer.eos_token_id], flagged

    def generate(
        self, texts: Sequence[str], max_new_units: int
    ) -> tuple[list[str], list[bool]]:
        outputs: list[str] = []
        truncated: list[bool] = []
        pad = self.tokenizer.pad_token_id
        for start in range(0, len(texts), self.cfg.batch_size):
            batch = texts[start : start + self.cfg.batch_size]
            encoded = [self._encode(text) for text in batch]
            truncated.extend(flag for _, flag in encoded)
            width = max(len(ids) for ids, _ in encoded)
            input_ids = self.torch.full((len(batch), width), pad, dtype=self.torch.long)
            mask = self.torch.zeros((len(batch), width), dtype=self.torch.long)
            for row, (ids, _) in enumerate(encoded):
                input_ids[row, : len(ids)] = self.torch.tensor(ids)
                mask[row, : len(ids)] = 1
            with self.torch.no_grad():
                generated = self.model.generate(
                    input_ids=input_ids.to(self.cfg.device),
                    attention_mask=mask.to(self.cfg.device),
                    max_new_tokens=min(max_new_units, self.cfg.max_target_length),
                    num_beams=self.cfg.beam_width,
                    do_sample=False,
                )
            outputs.extend(self.tokenizer.batch_decode(generated, skip_special_tokens=True))
        return outputs, truncated

    def token_embeddings(self, text: str) -> np.ndarray:
        ids = self.tokenizer(text, add_special_tokens=False)["input_ids"]
        if not ids:
            return np.zeros((0, self.model.get_input_embeddings().embedding_dim))
        with self.torch.no_grad():
            vectors = self.model.get_input_embeddings()(
                self.torch.tensor([ids], device=self.cfg.device)
            )
        return vectors[0].cpu().numpy()


def build_model(cfg: ServeConfig) -> TextModel:
    if cfg.model == ECHO_MODEL:
        return EchoModel(cfg)
    return CheckpointModel(cfg)
