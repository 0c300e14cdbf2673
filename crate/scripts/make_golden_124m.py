"""Reference logits for the 124M GPT-2 parity check.

Runs the Hugging Face `transformers` GPT-2 on data/parity_sentences.txt and
writes DIR/golden_124m.safetensors with, per sentence k:

    seq{k}.tokens          int64 [n]
    seq{k}.logits          float32 [n, vocab]
    seq{k}.surprisal_bits  float64 [n]  (0 at position 0)

DIR must hold a Hugging Face GPT-2 checkpoint (config.json plus
model.safetensors) and vocab.json / merges.txt:

    python3 scripts/make_golden_124m.py /path/to/gpt2

With --random-init, DIR is first filled with a randomly initialized
124M-shaped checkpoint (useful for exercising the pipeline offline; the
acceptance checks that need trained weights will not be meaningful).
"""

import argparse
import os
import shutil

import torch
from safetensors.torch import save_file
from transformers import GPT2Config, GPT2LMHeadModel, GPT2Tokenizer

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dir")
    ap.add_argument("--random-init", action="store_true")
    args = ap.parse_args()
    os.makedirs(args.dir, exist_ok=True)

    for name in ["vocab.json", "merges.txt"]:
        dst = os.path.join(args.dir, name)
        if not os.path.exists(dst):
            shutil.copy(os.path.join(ROOT, "data", "gpt2", name), dst)

    if args.random_init:
        torch.manual_seed(124)
        model = GPT2LMHeadModel(GPT2Config(attn_implementation="eager"))
        model.save_pretrained(args.dir, safe_serialization=True)
    model = GPT2LMHeadModel.from_pretrained(args.dir, attn_implementation="eager")
    model.eval()

    tok = GPT2Tokenizer(os.path.join(args.dir, "vocab.json"), os.path.join(args.dir, "merges.txt"))
    with open(os.path.join(ROOT, "data", "parity_sentences.txt"), encoding="utf-8") as f:
        sentences = [line.rstrip("\n") for line in f if line.strip()]

    ln2 = torch.log(torch.tensor(2.0, dtype=torch.float64))
    golden = {}
    for k, s in enumerate(sentences):
        ids = torch.tensor([tok.encode(s)])
        with torch.no_grad():
            logits = model(ids).logits[0].to(torch.float32)
        logp = torch.log_softmax(logits.double(), dim=-1)
        n = ids.shape[1]
        surp = torch.zeros(n, dtype=torch.float64)
        for p in range(1, n):
            surp[p] = -logp[p - 1, ids[0, p]] / ln2
        golden[f"seq{k}.tokens"] = ids[0].to(torch.int64).contiguous()
        golden[f"seq{k}.logits"] = logits.contiguous()
        golden[f"seq{k}.surprisal_bits"] = surp.contiguous()
    out = os.path.join(args.dir, "golden_124m.safetensors")
    save_file(golden, out)
    print("wrote", out)


if __name__ == "__main__":
    main()
