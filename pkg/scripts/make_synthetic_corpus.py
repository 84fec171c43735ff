"""Regenerate the bundled 200-sentence synthetic cue corpus."""

import argparse
from pathlib import Path

from defextract.corpus import write_conll
from defextract.synthetic import generate_cue_corpus

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "defextract" / "data" / "synthetic_cue.conll"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    d = generate_cue_corpus(args.n, args.seed)
    args.out.write_text(write_conll(d), encoding="utf-8")
    print(f"wrote {len(d)} sentences to {args.out}")
