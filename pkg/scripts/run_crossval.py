"""10-fold cross-validation on the bundled corpus with a results table.

    python scripts/run_crossval.py --folds 10 --seed 0 --epochs 50
    python scripts/run_crossval.py --data my.conll --learning-rates 5e-4 0.05

Each learning rate gets one row (raw CRF output and after post-processing).
"""

import argparse
import os
import time

from defextract.corpus import load_dataset
from defextract.crf import TrainConfig
from defextract.crossval import crossval
from defextract.metrics import format_table
from defextract.synthetic import load_shipped_corpus


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=None, help="CoNLL/JSONL file (default: bundled corpus)")
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    ap.add_argument("--learning-rates", type=float, nargs="+", default=[TrainConfig.learning_rate])
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    ds = load_dataset(args.data)[0] if args.data else load_shipped_corpus()
    rows = {}
    for lr in args.learning_rates:
        t0 = time.perf_counter()
        res = crossval(ds, args.folds, args.seed, TrainConfig(epochs=args.epochs, learning_rate=lr), jobs=args.jobs)
        rows[f"lr={lr:g} raw"] = res.raw_mean
        rows[f"lr={lr:g} +rules"] = res.mean
        print(f"lr={lr:g}: {time.perf_counter() - t0:.1f}s")
    print(f"\n{len(ds)} sentences, {args.folds} folds, seed {args.seed}, {args.epochs} epochs\n")
    print(format_table(rows))


if __name__ == "__main__":
    main()
