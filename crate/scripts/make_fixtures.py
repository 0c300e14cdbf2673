"""Generate reference fixtures for the Rust test suites.

Uses the Hugging Face `transformers` GPT-2 implementation (PyTorch) and the
reference GPT-2 tokenizer as oracles. Run from the workspace root:

    python3 scripts/make_fixtures.py

Outputs land in crates/core/tests/data/.
"""

import json
import os

import torch
from safetensors.torch import save_file
from transformers import GPT2Config, GPT2LMHeadModel, GPT2Tokenizer

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "crates", "core", "tests", "data")
VOCAB = os.path.join(ROOT, "data", "gpt2", "vocab.json")
MERGES = os.path.join(ROOT, "data", "gpt2", "merges.txt")

TOKENIZER_STRINGS = [
    "The slogan on the posters were designed to get attention.",
    "The slogan on the poster was designed to get attention.",
    "The basketball coach who trained the star players usually blamed themselves for the loss.",
    "The commentators who the viewer trust",
    "The executive who oversaw the middle managers apparently were dishonest",
    "naïve déjà-vu",
    "I'm sure they'll say it's fine, isn't it?",
    "Numbers: 12345 and 3.14159 or 1,000,000!",
    "  leading spaces and   runs of   whitespace\n\nnew lines\t\ttabs  ",
    "emoji 🦀🚀 and CJK 漢字 mixed with Ελληνικά",
    "",
    " ",
    "a",
    "'s 's 'S 'll 've 're 'd 'm 't",
]


def tokenizer_golden():
    tok = GPT2Tokenizer(VOCAB, MERGES)
    cases = []
    for s in TOKENIZER_STRINGS:
        ids = tok.encode(s)
        cases.append({"text": s, "ids": ids})
    with open(os.path.join(OUT, "tokenizer_golden.json"), "w", encoding="utf-8") as f:
        json.dump({"cases": cases}, f, ensure_ascii=False, indent=1)


def published_names(model):
    """State dict under the published GPT-2 checkpoint naming (no prefix, no lm_head)."""
    sd = {}
    for k, v in model.transformer.state_dict().items():
        if k.endswith("attn.bias") and v.dim() == 4:
            continue
        if k.endswith("attn.masked_bias"):
            continue
        sd[k] = v.detach().clone().contiguous()
    return sd


def tiny_model_golden():
    torch.manual_seed(20210601)
    cfg = GPT2Config(
        vocab_size=512,
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=4,
        layer_norm_epsilon=1e-5,
        attn_implementation="eager",
    )
    model = GPT2LMHeadModel(cfg)
    # Spread the random weights so attention rows are far from uniform.
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "ln" in name:
                p.add_(0.1 * torch.randn_like(p))
            else:
                p.normal_(0.0, 0.35)
    model.eval()
    sd = published_names(model)
    save_file(sd, os.path.join(OUT, "tiny_gpt2.safetensors"))
    save_file(
        {k: v.to(torch.float16) for k, v in sd.items()},
        os.path.join(OUT, "tiny_gpt2_f16.safetensors"),
    )
    with open(os.path.join(OUT, "tiny_gpt2_config.json"), "w") as f:
        json.dump(
            {
                "n_layer": 2,
                "n_head": 4,
                "n_embd": 32,
                "vocab_size": 512,
                "n_positions": 64,
                "layer_norm_epsilon": 1e-5,
            },
            f,
            indent=1,
        )

    gen = torch.Generator().manual_seed(7)
    golden = {}
    lengths = [1, 2, 3, 5, 8, 10, 13, 16, 21, 30]
    for k, n in enumerate(lengths):
        ids = torch.randint(0, 512, (1, n), generator=gen)
        with torch.no_grad():
            out = model(ids, output_attentions=True)
        logits = out.logits[0].to(torch.float32)
        attn = torch.stack([a[0] for a in out.attentions]).to(torch.float32)
        logp = torch.log_softmax(logits.double(), dim=-1)
        # surprisal (bits) of token p given tokens before p, for p >= 1
        surp = torch.zeros(n, dtype=torch.float64)
        for p in range(1, n):
            surp[p] = -logp[p - 1, ids[0, p]] / torch.log(torch.tensor(2.0, dtype=torch.float64))
        golden[f"seq{k}.tokens"] = ids[0].to(torch.int64).contiguous()
        golden[f"seq{k}.logits"] = logits.contiguous()
        golden[f"seq{k}.attn"] = attn.contiguous()
        golden[f"seq{k}.surprisal_bits"] = surp.contiguous()
    save_file(golden, os.path.join(OUT, "tiny_gpt2_golden.safetensors"))


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    tokenizer_golden()
    tiny_model_golden()
    print("fixtures written to", OUT)
