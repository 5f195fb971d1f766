"""Script entry point: render one figure from a completed sweep."""

import argparse
import sys

from .render import FIGURE_KINDS, RenderError, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(prog="glider-figs",
                                     description="Render figures from sweep CSV output")
    parser.add_argument("--summary-dir", required=True, help="sweep output directory")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--flow", required=True,
                        help="center | unstable-node | saddle | stable-node")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--gliders", type=int, default=5, help="cohort for path plots")
    parser.add_argument("--seed", type=int, default=0, help="seed for path plots")
    parser.add_argument("--band", action="store_true", help="min-max band across seeds")
    args = parser.parse_args(argv)
    try:
        n = render(args.summary_dir, args.kind, args.flow, args.out,
                   cohort=args.gliders, seed=args.seed, band=args.band)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({n} curves)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
