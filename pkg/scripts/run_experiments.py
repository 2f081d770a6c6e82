#!/usr/bin/env python3
"""Run the canned experiment configurations and write their reports.

Usage:
    python scripts/run_experiments.py                 # everything
    python scripts/run_experiments.py identity rate   # a subset

Equivalent to `nullrec experiment --config scripts/configs/<name>.json` per
name; reports land under out/.  The rate and tail runs take a few minutes
each; set NULLREC_THREADS to parallelize replications.
"""

import json
import sys
import time
from pathlib import Path

from nullrec.cli import emit_report
from nullrec.harness import ExperimentConfig, run_experiment

CONFIG_DIR = Path(__file__).parent / "configs"
ORDER = ("identity", "rate", "tail", "rlt", "risk")


def main(names):
    failures = []
    for name in names:
        data = json.loads((CONFIG_DIR / f"{name}.json").read_text())
        config = ExperimentConfig.from_dict(data)
        print(f"[{time.strftime('%H:%M:%S')}] running {name} ...", flush=True)
        report = run_experiment(config)
        files = emit_report(report, config.output or f"out/{name}")
        status = "pass" if report.overall_pass else "FAIL"
        print(f"  {status} in {report.wall_clock:.1f}s -> {files[0]}")
        if not report.overall_pass:
            failures.append(name)
            for row in report.rows:
                if row.passed is False:
                    print(f"    failed row: {row.stat_name} = {row.value:.6g} "
                          f"(tolerance {row.tolerance})")
    return 1 if failures else 0


if __name__ == "__main__":
    chosen = sys.argv[1:] or list(ORDER)
    unknown = set(chosen) - set(ORDER)
    if unknown:
        sys.exit(f"unknown experiment name(s): {sorted(unknown)}")
    sys.exit(main(chosen))
