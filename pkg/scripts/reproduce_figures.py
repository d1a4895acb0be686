#!/usr/bin/env python3
"""Reproduce every registered figure scenario and print the scoreboard.

Equivalent to `fa-lab reproduce <name>` for each dynamics scenario; pass
--out to choose the artifact directory (default $FA_LAB_OUT or ./out).
"""

import argparse
import os
import sys

from fa_lab import cli, experiments


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.environ.get("FA_LAB_OUT", "out"))
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--only", nargs="*", default=None,
                        help="subset of scenario names")
    args = parser.parse_args()

    names = [n for n in experiments.scenario_names()
             if experiments.scenario(n).kind == "dynamics"]
    if args.only:
        names = [n for n in names if n in set(args.only)]
    worst = 0
    for name in names:
        code = cli.main(["reproduce", name, "--out", args.out,
                         "--jobs", str(args.jobs)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
