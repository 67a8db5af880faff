#!/usr/bin/env python3
"""Run the reproduction experiment suite from the repo checkout.

Equivalent to ``legendrelab verify-paper``; handy when the console script
is not on PATH. Example:

    python scripts/run_verify_paper.py --experiment all --out out/verify
"""

import sys

from legendrelab.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify-paper", *sys.argv[1:]]))
