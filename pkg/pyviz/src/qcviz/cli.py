"""qcviz render --bundle dir --fig weyl|heat|wave|bands|qe --out file.png"""

import argparse
import sys

from .bundle import MissingInput, ResultBundle
from .figures import FIGURES, render


def main(argv=None):
    parser = argparse.ArgumentParser(prog="qcviz")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("--bundle", required=True, help="qclab output directory")
    p.add_argument("--fig", required=True, choices=sorted(FIGURES))
    p.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        bundle = ResultBundle.from_dir(args.bundle)
        render(bundle, args.fig, args.out)
    except MissingInput as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
