#!/usr/bin/env python3
"""Practical-individualization comparison on the default synthetic cohort.

Pits leave-one-out average transfer-ratio estimates (with true or
model-based receiver paths) against the fully generic dummy-head and
average filters.
"""

import argparse
import sys
from pathlib import Path

from eqforge.cli import main as eqforge_main

CONDITIONS = "Optimal,GenericDH,GenericAV,PracticalModelBased,PracticalOptimal"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/experiment2")
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
