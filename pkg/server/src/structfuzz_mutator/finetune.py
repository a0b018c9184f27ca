"""Fine-tune scaffold over exported dataset records.

Consumes the fuzzer's pairs.jsonl format: one JSON object per line with
format_tag, criteria, is_noise, prompt, original_hex, mutated_hex.  Records
become supervised prompt -> completion examples (the completion is the
mutated hex) and run a configurable number of optimizer steps.  Noise
records are training data by design and are not filtered.  The dry run uses
the toy model; training always happens in float32 since the precision flag
is a serving concern.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .backend import BackendConfig
from .hexnorm import decode_strict


class FinetuneError(Exception):
    pass


@dataclass(frozen=True)
class SkippedRecord:
    lineno: int
    reason: str


@dataclass
class FinetuneReport:
    used_records: int
    steps: int
    final_loss: float
    artifact: Path | None
    skipped: list[SkippedRecord] = field(default_factory=list)


_FIELD_TYPES = (
    ("format_tag", str),
    ("criteria", list),
    ("is_noise", bool),
    ("prompt", str),
    ("original_hex", str),
    ("mutated_hex", str),
)


def load_records(path):
    """(usable records, skipped) from a pairs.jsonl file."""
    records = []
    skipped = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                skipped.append(SkippedRecord(lineno, "not valid JSON"))
                continue
            if not isinstance(rec, dict):
                skipped.append(SkippedRecord(lineno, "record is not an object"))
                continue
            reason = None
            for name, typ in _FIELD_TYPES:
                if name not in rec:
                    reason = f"missing field {name}"
                    break
                if not isinstance(rec[name], typ):
                    reason = f"field {name} has wrong type"
                    break
            if reason is None:
                for name in ("original_hex", "mutated_hex"):
                    if decode_strict(rec[name]) is None:
                        reason = f"field {name} is not lowercase hex"
                        break
            if reason is not None:
                skipped.append(SkippedRecord(lineno, reason))
                continue
            records.append(rec)
    return records, skipped


def finetune_scaffold(
    records_path,
    cfg: BackendConfig,
    out_path,
    steps: int = 20,
    seed: int = 0,
    lr: float = 1e-2,
) -> FinetuneReport:
    """Run the training loop over a record file and save the weights."""
    from . import toymodel

    torch = toymodel._torch()
    if steps < 1:
        raise FinetuneError("steps must be >= 1")
    records, skipped = load_records(records_path)

    examples = []
    for rec in records:
        prompt = toymodel.encode_text(rec["prompt"])
        completion = toymodel.encode_text(rec["mutated_hex"])
        seq = [toymodel.BOS, *prompt, *completion, toymodel.EOS]
        completion_start = 1 + len(prompt)
        seq = seq[: cfg.max_input_tokens]
        if len(seq) <= completion_start:
            skipped.append(
                SkippedRecord(0, "record exceeds max_input_tokens, no completion left")
            )
            continue
        examples.append((seq, completion_start))
    if not examples:
        raise FinetuneError(f"no usable records in {records_path}")

    model = toymodel.build_model(lora=cfg.lora, seed=seed)
    params = model.trainable_parameters()
    optim = torch.optim.Adam(params, lr=lr)
    loss_fn = torch.nn.CrossEntropyLoss()
    model.train()
    final_loss = math.inf
    for step in range(steps):
        seq, start = examples[step % len(examples)]
        tokens = torch.tensor([seq], dtype=torch.long)
        logits, _ = model(tokens[:, :-1])
        # predict only the completion (and EOS) from what precedes it
        target = tokens[0, start:]
        loss = loss_fn(logits[0, start - 1 :], target)
        optim.zero_grad()
        loss.backward()
        optim.step()
        final_loss = float(loss.item())
    if not math.isfinite(final_loss):
        raise FinetuneError(f"training diverged, loss={final_loss}")

    artifact = None
    if out_path is not None:
        artifact = Path(out_path)
        torch.save(
            {
                "state_dict": model.state_dict(),
                "lora": cfg.lora,
                "steps": steps,
                "records": len(examples),
            },
            artifact,
        )
    return FinetuneReport(
        used_records=len(examples),
        steps=steps,
        final_loss=final_loss,
        artifact=artifact,
        skipped=skipped,
    )
