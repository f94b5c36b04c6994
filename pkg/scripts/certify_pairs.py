"""Print obstruction certificates for every meridian pair up to --max-index."""
import argparse

from lorhom.factor import FactorSpec
from lorhom.homotopy import obstruction_margin
from lorhom.timelike import build_modified_factor, derive_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--variant", choices=["unit", "base", "modified"], default="base")
    ap.add_argument("--max-index", type=int, default=4)
    ap.add_argument("--levels", type=int, nargs=2, default=(6, 7))
    args = ap.parse_args()
    spec = FactorSpec.base() if args.variant != "unit" else FactorSpec.unit()
    if args.variant == "modified":
        spec = build_modified_factor(spec, derive_params(spec, 6))
    print(f"{'pair':>8} {'margin':>14} {'error':>11} {'rel.change':>11}  verdict")
    for i in range(1, args.max_index + 1):
        for j in range(i + 1, args.max_index + 1):
            c = obstruction_margin(spec, i, j, tuple(args.levels))
            coarse = min(a.coarse_excess for a in c.arcs)
            rel = abs(c.margin - coarse) / c.margin if c.margin else 0.0
            print(f"{f'({i},{j})':>8} {c.margin:14.6e} {c.error:11.3e} {rel:11.2e}  {c.verdict}")


if __name__ == "__main__":
    main()
