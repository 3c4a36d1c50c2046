"""plotkit <results.csv> --metric joint_entropy --out fig.svg"""

from __future__ import annotations

import argparse
import sys

from .render import render_comparison
from .series import SchemaError, load_results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render a seqdesign results CSV into a strategy-comparison figure.",
    )
    parser.add_argument("results", help="results CSV (strategy,stage,metric,value,stderr)")
    parser.add_argument("--metric", required=True,
                        help="metric to plot, e.g. joint_entropy, rmse, std_theta1")
    parser.add_argument("--out", required=True, help="output figure path (.svg or .pdf)")
    args = parser.parse_args(argv)
    try:
        series = load_results(args.results)
        render_comparison(series, args.metric, args.out)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
