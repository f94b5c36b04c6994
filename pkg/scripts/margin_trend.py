"""Margin of one pair across field levels, to judge convergence."""
import argparse

from lorhom.factor import FactorSpec
from lorhom.homotopy import arc_maxima


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pair", type=int, nargs=2, default=(1, 2))
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    args = ap.parse_args()
    spec = FactorSpec.base()
    prev = None
    print(f"{'level':>5} {'inner':>14} {'outer':>14} {'margin':>14} {'change':>10}")
    for lv in args.levels:
        arcs = arc_maxima(spec, *args.pair, lv)
        margin = min(arcs["inner"][0], arcs["outer"][0])
        change = "" if prev is None else f"{abs(margin - prev) / margin:10.2e}"
        print(f"{lv:5d} {arcs['inner'][0]:14.6e} {arcs['outer'][0]:14.6e} {margin:14.6e} {change}")
        prev = margin


if __name__ == "__main__":
    main()
