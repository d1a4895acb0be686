#!/usr/bin/env python3
"""Run every verification suite (conservation facts, stationary-point
oracles, separation/overlap bounds, convergence-time bound, trace potential).

Equivalent to `fa-lab verify all`; exits nonzero on the first failing check.
"""

import argparse
import sys

from fa_lab import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--heavy", action="store_true",
                        help="also run the proof-constant-scale separation trials")
    args = parser.parse_args()
    argv = ["verify", "all"]
    if args.heavy:
        argv.append("--heavy")
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
