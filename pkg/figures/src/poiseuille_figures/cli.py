"""Command-line front end: ``poiseuille-figs render --kind ... --in ... --out ...``"""

import argparse
import sys

from .render import SCHEMAS, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="poiseuille-figs",
        description="render diagnostic figures from the stability tool's CSV outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render")
    r.add_argument("--kind", required=True, choices=sorted(SCHEMAS))
    r.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="CSV")
    r.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        meta = render(args.kind, args.inputs, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot write figure: {exc}", file=sys.stderr)
        return 2
    summary = ", ".join(f"{key}={value}" for key, value in sorted(meta.items(), key=str))
    print(f"wrote {args.out} ({summary})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
