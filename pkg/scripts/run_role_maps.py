"""Terminal-role map: which assignment of the two arrays (transmit vs
receive) gives the lower bound at each target cell.

Runs the optimizer twice per cell with the array roles swapped and writes
role_map.csv with the per-cell winner flag (+1 forward, -1 swapped, 0 tie).
Forwards to `bisense map --kind role`.
"""

import argparse
import sys

from bisense.cli import main


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="YAML run config (defaults used if omitted)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--full-res", action="store_true", help="4x finer grid")
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    argv = ["map", "--kind", "role"]
    if args.config:
        argv += ["--config", args.config]
    if args.out:
        argv += ["--out", args.out]
    if args.full_res:
        argv += ["--full-res"]
    sys.exit(main(argv))
