"""Command line: ``lorhom <task> --config scenario.toml [--mesh-level L] [--seed S] [--out DIR]``.

Exit status: 0 when all declared expectations hold, 1 when a verdict is
inconclusive, 2 on a contradiction or alarm, 3 on a configuration error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import TASK_ALIASES, TASKS, ConfigError, load_scenario
from .reports import EXIT_CONFIG, run

OUT_ENV = "LORHOM_OUT"
DEFAULT_OUT = "lorhom-out"

log = logging.getLogger("lorhom")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lorhom", description="Run a causal-homotopy scenario and write its report.")
    p.add_argument("task", choices=TASKS + tuple(TASK_ALIASES))
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--mesh-level", type=int, default=None, help="override the resolution level")
    p.add_argument("--seed", type=int, default=None, help="override the random seed")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        sc = load_scenario(args.config, args.mesh_level, args.seed)
        if sc.task != TASK_ALIASES.get(args.task, args.task):
            raise ConfigError(f"config declares task {sc.task!r}, command line asks for {args.task!r}")
        code, report = run(sc, out)
    except (ConfigError, ValueError) as exc:
        # ValueError here means task parameters the pipeline cannot use
        log.error("%s", exc)
        print(f"lorhom: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{sc.name}: {report['status']} (exit {code}) -> {os.path.join(out, sc.name + '.json')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
