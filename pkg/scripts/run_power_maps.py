"""Steering-direction power-share map over the default desk-scale scene.

For each admissible cell, reports the fraction of the transmit budget the
optimal beams put on the direction toward the target (sum of b11 over
subcarriers divided by the budget). Shares approach 1 behind the receive
terminal and fall off close to it. Forwards to `bisense map --kind power`.
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
    argv = ["map", "--kind", "power"]
    if args.config:
        argv += ["--config", args.config]
    if args.out:
        argv += ["--out", args.out]
    if args.full_res:
        argv += ["--full-res"]
    sys.exit(main(argv))
