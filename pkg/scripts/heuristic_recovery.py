"""Ablation of the post-processing rules on artificially corrupted gold tags.

Corrupts the bundled corpus (B/I flips plus deleted interior I tags) and
reports scores for the raw corrupted tags and for each rule added in turn.

    python scripts/heuristic_recovery.py --seeds 5 --flip 0.2 --delete 0.1
"""

import argparse

from defextract.heuristics import HeuristicsConfig, postprocess
from defextract.metrics import evaluate, evaluate_predictions, format_table, mean_report
from defextract.synthetic import corrupt_dataset, load_shipped_corpus

ROWS = {
    "+ repair": HeuristicsConfig(enable_stitch=False, enable_filter=False),
    "+ stitch": HeuristicsConfig(enable_filter=False),
    "+ filter": HeuristicsConfig(),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--flip", type=float, default=0.2)
    ap.add_argument("--delete", type=float, default=0.1)
    ap.add_argument("--max-gap", type=int, default=3)
    args = ap.parse_args()

    ds = load_shipped_corpus()
    gold = [s.gold_tags for s in ds]
    reports: dict[str, list] = {"corrupted": [], **{k: [] for k in ROWS}}
    for seed in range(args.seeds):
        noisy = corrupt_dataset(ds, seed, args.flip, args.delete)
        reports["corrupted"].append(evaluate(gold, noisy))
        for name, cfg in ROWS.items():
            cfg = HeuristicsConfig(args.max_gap, cfg.enable_repair, cfg.enable_stitch, cfg.enable_filter)
            reports[name].append(evaluate_predictions(gold, [postprocess(t, cfg) for t in noisy]))
    means = {k: mean_report(v) for k, v in reports.items()}
    print(f"{len(ds)} sentences, {args.seeds} corruption seeds, flip={args.flip}, delete={args.delete}\n")
    print(format_table(means))
    gain = 100 * (means["+ filter"].macro.f1 - means["corrupted"].macro.f1)
    print(f"macro F gain from post-processing: {gain:+.1f} points")


if __name__ == "__main__":
    main()
