"""Fine-tune a checkpoint on cast input/target pairs.

Reads the JSONL files the harness writes (one {"id", "task", "input",
"target"} object per line), trains with linear learning-rate decay, and
saves a checkpoint directory the serving process can load. With --init
tiny it first builds a small randomly initialized encoder-decoder and a
byte-level tokenizer from the training texts, so the whole loop runs
offline on CPU.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import random
import sys
from pathlib import Path

logger = logging.getLogger(__name__)

# per-task epoch defaults; --epochs overrides
DEFAULT_EPOCHS = {"wd": 100, "ast": 14, "cds": 21}
TINY_VOCAB = 384


def read_pairs(path: str | Path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                pairs.append((row["input"], row["target"]))
            except (ValueError, TypeError, KeyError) as exc:
                raise ValueError(f"{path}:{number}: not an input/target row ({exc})")
    return pairs


def build_tiny(texts: list[str], seed: int):
    """A small fresh model plus a byte-level tokenizer fit to the texts."""
    import torch
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
    from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration

    tok = Tokenizer(models.BPE(unk_token=None))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=TINY_VOCAB, special_tokens=["<pad>", "</s>"], show_progress=False
    )
    tok.train_from_iterator(texts, trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok, pad_token="<pad>", eos_token="</s>"
    )
    config = T5Config(
        vocab_size=len(tokenizer),
        d_model=64,
        d_kv=16,
        d_ff=128,
        num_layers=2,
        num_heads=4,
        dropout_rate=0.0,
        pad_token_id=tokenizer.pad_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.pad_token_id,
    )
    torch.manual_seed(seed)
    return tokenizer, T5ForConditionalGeneration(config)


def load_checkpoint(path: str):
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    return AutoTokenizer.from_pretrained(path), AutoModelForSeq2SeqLM.from_pretrained(path)


def _encode_batch(tokenizer, texts, limit, device, as_labels=False):
    import torch

    eos = tokenizer.eos_token_id
    pad = tokenizer.pad_token_id
    rows = [
        tokenizer(text, add_special_tokens=False)["input_ids"][: limit - 1] + [eos]
        for text in texts
    ]
    width = max(len(row) for row in rows)
    fill = -100 if as_labels else pad
    ids = torch.full((len(rows), width), fill, dtype=torch.long)
    mask = torch.zeros((len(rows), width), dtype=torch.long)
    for index, row in enumerate(rows):
        ids[index, : len(row)] = torch.tensor(row)
        mask[index, : len(row)] = 1
    return ids.to(device), mask.to(device)


def finetune(args: argparse.Namespace) -> Path:
    import torch
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()
    hf_logging.set_verbosity_error()

    pairs = read_pairs(args.train)
    if not pairs:
        raise ValueError(f"{args.train} holds no training pairs")
    epochs = args.epochs if args.epochs is not None else DEFAULT_EPOCHS[args.task]

    if args.model:
        tokenizer, model = load_checkpoint(args.model)
        base = args.model
    else:
        texts = [text for pair in pairs for text in pair]
        tokenizer, model = build_tiny(texts, args.seed)
        base = "tiny"
    model.to(args.device)
    model.train()

    steps_per_epoch = math.ceil(len(pairs) / args.batch_size)
    total_steps = max(1, epochs * steps_per_epoch)
    optimizer = torch.optim.AdamW(model.parameters(), lr=args.lr)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
    )
    torch.manual_seed(args.seed)
    order_rng = random.Random(args.seed)

    for epoch in range(epochs):
        order = list(range(len(pairs)))
        order_rng.shuffle(order)
        losses = []
        for start in range(0, len(order), args.batch_size):
            chunk = [pairs[i] for i in order[start : start + args.batch_size]]
            sources, mask = _encode_batch(
                tokenizer, [s for s, _ in chunk], args.max_source_length, args.device
            )
            labels, _ = _encode_batch(
                tokenizer,
                [t for _, t in chunk],
                args.max_target_length,
                args.device,
                as_labels=True,
            )
            loss = model(input_ids=sources, attention_mask=mask, labels=labels).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            schedule.step()
            losses.append(float(loss.detach()))
        logger.info("epoch %d/%d loss %.4f", epoch + 1, epochs, sum(losses) / len(losses))

    out = Path(args.out)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    echo = {
        "task": args.task,
        "epochs": epochs,
        "lr": args.lr,
        "batch_size": args.batch_size,
        "max_source_length": args.max_source_length,
        "max_target_length": args.max_target_length,
        "seed": args.seed,
        "n_samples": len(pairs),
        "base": base,
    }
    with open(out / "finetune_config.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genserver.finetune", description="Fine-tune a checkpoint on cast text pairs."
    )
    parser.add_argument("--train", required=True, help="cast JSONL file")
    parser.add_argument("--out", required=True, help="checkpoint directory to write")
    parser.add_argument("--task", choices=sorted(DEFAULT_EPOCHS), default="wd")
    parser.add_argument("--epochs", type=int, default=None, help="override the per-task default")
    parser.add_argument("--lr", type=float, default=5e-5)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-source-length", type=int, default=2048)
    parser.add_argument("--max-target-length", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--device", default="cpu")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="checkpoint directory to continue from")
    source.add_argument(
        "--init", choices=["tiny"], help="build a fresh model instead of loading one"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        out = finetune(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(f"saved checkpoint to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
