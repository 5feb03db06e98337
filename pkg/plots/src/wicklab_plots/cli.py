"""`plots render --spec fig.yaml`: batch figure rendering.

The spec file holds one figure mapping or a list of them; see render.py for
the recognized keys.  Exits 0 on success and 2 on any spec or schema error,
printing the offending column or key.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .render import SchemaError, render


def build_parser():
    top = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render figures from a YAML spec")
    p.add_argument("--spec", required=True, help="YAML figure spec (mapping or list)")
    return top


def main(argv=None):
    args = build_parser().parse_args(sys.argv[1:] if argv is None else list(argv))
    try:
        with open(args.spec) as fh:
            payload = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as err:
        print(f"spec error: {err}", file=sys.stderr)
        return 2
    specs = payload if isinstance(payload, list) else [payload]
    try:
        for spec in specs:
            if not isinstance(spec, dict):
                raise SchemaError(f"figure spec must be a mapping, got {type(spec).__name__}")
            out = render(spec)
            print(out)
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
