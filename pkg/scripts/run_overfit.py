#!/usr/bin/env python3
"""End-to-end overfit experiment on a synthetic corpus.

Generates 20 size-check patches (positive) and 20 cosmetic refactors
(negative), splits 8:1:1, trains with default hyperparameters, and reports
train/valid/test metrics plus timing.

Usage: python scripts/run_overfit.py [--epochs 50] [--seed 7] [--dir DIR]
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

from repospd.cli import _load_corpus
from repospd.synthdata import make_corpus
from repospd.trainer import TrainConfig, evaluate, split_corpus, train


def run(corpus_dir: Path, epochs: int, seed: int) -> dict:
    t0 = time.monotonic()
    corpus_path = make_corpus(corpus_dir, n_pos=20, n_neg=20, seed=seed)
    cfg = TrainConfig(epochs=epochs, seed=seed)
    samples = _load_corpus(corpus_path, cfg)
    build_s = time.monotonic() - t0

    train_part, valid_part, test_part = split_corpus(samples, cfg.seed)
    t1 = time.monotonic()
    params, history = train(train_part, cfg, valid=valid_part)
    train_s = time.monotonic() - t1

    return {
        "split": {"train": len(train_part), "valid": len(valid_part), "test": len(test_part)},
        "train_metrics": evaluate(params, train_part).to_dict(),
        "valid_metrics": evaluate(params, valid_part).to_dict(),
        "test_metrics": evaluate(params, test_part).to_dict(),
        "final_epoch": {k: history[-1][k] for k in ("epoch", "loss", "train_accuracy")},
        "timing_s": {"build": round(build_s, 2), "train": round(train_s, 2)},
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--dir", type=Path, help="corpus directory (default: temporary)")
    args = parser.parse_args()
    if args.dir is not None:
        report = run(args.dir, args.epochs, args.seed)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            report = run(Path(tmp), args.epochs, args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
