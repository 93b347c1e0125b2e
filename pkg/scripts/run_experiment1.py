#!/usr/bin/env python3
"""Receiver-path estimate comparison on the default synthetic cohort.

Designs equalizers with perfect, dummy-head, in-ear, and model-based
receiver-to-eardrum estimates and prints how close each aided response
stays to the open-ear reference across the device delays.
"""

import argparse
import sys
from pathlib import Path

from eqforge.cli import main as eqforge_main

CONDITIONS = "Optimal,GenericDH,NaiveInEar,ModelBased"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/experiment1")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--delays", default="0,1,16,96")
    args = parser.parse_args()

    rc = eqforge_main([
        "experiment",
        "--conditions", CONDITIONS,
        "--delays", args.delays,
        "--seed", str(args.seed),
        "--out", args.out,
    ])
    if rc == 0:
        print((Path(args.out) / "ranking.csv").read_text())
    return rc


if __name__ == "__main__":
    sys.exit(main())
