#!/usr/bin/env python3
"""Run the controlled-flow solver and the null-control baseline on the
synthetic linear task, then print the validation-cost comparison."""

import json
import sys
from pathlib import Path

from sgaflow import cli

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "linear.json"


def main() -> int:
    out = Path("out/linear")
    rc = cli.main(["run", "--config", str(CONFIG), "--out", str(out)])
    if rc != 0:
        return rc
    metrics = json.loads((out / "metrics.json").read_text())
    print(json.dumps(metrics, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
