"""Position-error-bound map over the default desk-scale scene.

Optimizes the per-subcarrier beam covariances at every admissible grid cell
and writes peb_map.csv plus a metadata sidecar. Forwards to the CLI so the
output format matches `bisense map --kind peb`.
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
    argv = ["map", "--kind", "peb"]
    if args.config:
        argv += ["--config", args.config]
    if args.out:
        argv += ["--out", args.out]
    if args.full_res:
        argv += ["--full-res"]
    sys.exit(main(argv))
