"""Run every scenario in configs/ and tabulate exit codes."""
import argparse
import sys
from pathlib import Path

from lorhom import cli
from lorhom.config import ConfigError, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(Path(__file__).resolve().parents[1] / "configs"))
    ap.add_argument("--out", default="lorhom-out")
    args = ap.parse_args()
    worst = 0
    for path in sorted(Path(args.configs).glob("*.toml")):
        try:
            task = load_scenario(path).task
        except ConfigError as exc:
            print(f"{path.stem:28s} config error: {exc}")
            continue
        code = cli.main([task, "--config", str(path), "--out", args.out])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
