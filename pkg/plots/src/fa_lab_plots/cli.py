"""Command line: `fa-lab-plots render <manifest>...` and
`fa-lab-plots compare <manifest_a> <manifest_b>`.

Exit codes: 0 success, 2 schema/usage error.
"""

from __future__ import annotations

import argparse
import sys

from .render import SchemaMismatch, compare, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fa-lab-plots",
                                     description="render fa-lab experiment figures")
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render one image per manifest")
    p_render.add_argument("manifests", nargs="+")
    p_render.add_argument("--out", default=None, help="image output directory")

    p_cmp = sub.add_parser("compare", help="max pointwise gap between two runs")
    p_cmp.add_argument("manifest_a")
    p_cmp.add_argument("manifest_b")
    p_cmp.add_argument("--report", default=None, help="write the report here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            for path in args.manifests:
                result = render(path, out_dir=args.out)
                print(f"{result.figure}: {len(result.labels)} series -> "
                      + ", ".join(result.images))
            return 0
        report = compare(args.manifest_a, args.manifest_b,
                         report_path=args.report)
        print(report.text, end="")
        return 0
    except (SchemaMismatch, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
