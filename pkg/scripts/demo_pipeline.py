#!/usr/bin/env python3
"""Walk the whole pipeline on the bundled eight-word fixture sentence:
graph export, shortest-path dump, attention/embedding dumps, and the
algebra verification suite. Artifacts land in ./demo_out."""

import sys
from pathlib import Path

from sga.cli import main

ROOT = Path(__file__).resolve().parent.parent
FLIGHT = str(ROOT / "fixtures" / "flight.conllu")
OUT = ROOT / "demo_out"


def run(argv):
    print(f"$ sga {' '.join(argv)}")
    code = main(argv)
    if code != 0:
        sys.exit(code)


if __name__ == "__main__":
    run(["graph", FLIGHT, "--format", "both", "--out-dir", str(OUT / "graphs")])
    run(["paths", FLIGHT, "--out", str(OUT / "paths.tsv")])
    run(
        ["encode", FLIGHT, "--random-init", "--seed", "0", "--toy",
         "--dump-scores", "--out-dir", str(OUT / "encoded")]
    )
    run(["verify", "algebra", "--out", str(OUT / "verify_algebra.json")])
    print(f"\nartifacts under {OUT}/")
