"""Tiny byte-level causal language model for the dry-run paths.

About 125k parameters (embedding + one GRU + head), far under the one-million
cap the dry-run promises.  It exists to prove that records flow through
tokenization, loss masking, optimizer steps, and generation end to end, not
to produce good mutations.  torch imports lazily so a stub-only install
never needs it.
"""

from __future__ import annotations

VOCAB = 258  # 256 byte values + BOS + EOS
BOS = 256
EOS = 257

EMBED_DIM = 64
HIDDEN_DIM = 128
LORA_RANK = 4
LORA_ALPHA = 8.0


def _torch():
    try:
        import torch
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise RuntimeError(
            "the model backend needs torch (pip install structfuzz-mutator[model])"
        ) from exc
    return torch


def encode_text(text: str) -> list[int]:
    return list(text.encode("utf-8", errors="replace"))


def decode_tokens(tokens) -> str:
    return bytes(t for t in tokens if t < 256).decode("utf-8", errors="replace")


def build_model(lora: bool = False, seed: int = 0):
    torch = _torch()
    from torch import nn

    class ToyLM(nn.Module):
        def __init__(self):
            super().__init__()
            self.embed = nn.Embedding(VOCAB, EMBED_DIM)
            self.rnn = nn.GRU(EMBED_DIM, HIDDEN_DIM, batch_first=True)
            self.head = nn.Linear(HIDDEN_DIM, VOCAB)
            self.lora_rank = LORA_RANK if lora else 0
            if lora:
                self.lora_a = nn.Linear(HIDDEN_DIM, LORA_RANK, bias=False)
                self.lora_b = nn.Linear(LORA_RANK, VOCAB, bias=False)
                nn.init.zeros_(self.lora_b.weight)

        def forward(self, tokens, state=None):
            h, state = self.rnn(self.embed(tokens), state)
            logits = self.head(h)
            if self.lora_rank:
                logits = logits + self.lora_b(self.lora_a(h)) * (
                    LORA_ALPHA / self.lora_rank
                )
            return logits, state

        def trainable_parameters(self):
            if not self.lora_rank:
                return list(self.parameters())
            return list(self.lora_a.parameters()) + list(self.lora_b.parameters())

    torch.manual_seed(seed)
    return ToyLM()


def param_count(model) -> int:
    return sum(p.numel() for p in model.parameters())


def generate(model, prompt_tokens, max_new: int, temperature: float) -> list[int]:
    """Sample up to max_new tokens after the prompt, stopping at EOS."""
    torch = _torch()
    model.eval()
    out: list[int] = []
    with torch.no_grad():
        tokens = torch.tensor([[BOS, *prompt_tokens]], dtype=torch.long)
        logits, state = model(tokens)
        for _ in range(max_new):
            probs = torch.softmax(logits[0, -1].float() / temperature, dim=-1)
            tok = int(torch.multinomial(probs, 1).item())
            if tok == EOS:
                break
            out.append(tok)
            logits, state = model(
                torch.tensor([[tok]], dtype=torch.long), state
            )
    return out
