#!/usr/bin/env python3
"""Materialize a synthetic labeled patch corpus for experiments.

Usage: python scripts/make_corpus.py --out DIR [--pos 20] [--neg 20] [--seed 0]
"""

import argparse
from pathlib import Path

from repospd.synthdata import make_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--pos", type=int, default=20)
    parser.add_argument("--neg", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    corpus = make_corpus(args.out, n_pos=args.pos, n_neg=args.neg, seed=args.seed)
    print(f"wrote {args.pos + args.neg} patches; corpus file: {corpus}")


if __name__ == "__main__":
    main()
