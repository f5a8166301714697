#!/usr/bin/env python3
"""
Run Results Analyzer
Summarizes a train, eval or ablate run directory
"""

import sys
from pathlib import Path
from typing import Dict, List

import jsonlines
import pandas as pd

from pcode_config.errors import DataError, PcodeError
from pcode_eval.ablation import summarize
from pcode_eval.report import EvalReport
from pcode_train.logger import METRICS_FILE

REPORT_FILE = "report.json"
ABLATION_FILE = "ablation.csv"
RULE = "=" * 60
NON_METRIC_COLUMNS = {"axis", "value", "seed", "optimizer_steps",
                      "source_train_sha256", "target_test_sha256"}


def load_metrics_log(run_dir: Path) -> List[Dict]:
    """Load the metrics log of a run, empty when the run wrote none"""
    path = Path(run_dir) / METRICS_FILE
    if not path.exists():
        return []
    try:
        with jsonlines.open(path) as reader:
            return list(reader)
    except jsonlines.InvalidLineError as e:
        raise DataError(f"Invalid JSON in {path}: {e}") from e


def load_ablation(run_dir: Path) -> pd.DataFrame:
    path = Path(run_dir) / ABLATION_FILE
    try:
        return pd.read_csv(path)
    except FileNotFoundError as e:
        raise DataError(f"File {path} not found") from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f"Ablation table {path} is empty") from e


def describe_log(records: List[Dict]) -> List[str]:
    if not records:
        return []
    epochs = [r for r in records if r.get("event") == "epoch"]
    steps = max((int(r.get("optimizer_step") or 0) for r in records), default=0)
    seeds = sorted({r["seed"] for r in records if r.get("seed") is not None})
    lines = ["", "TRAINING LOG:",
             f"   Events: {len(records)} ({len(epochs)} epoch records)",
             f"   Seeds: {', '.join(str(s) for s in seeds) or '-'}",
             f"   Optimizer steps: {steps}"]
    if steps == 0:
        lines.append("   No optimizer step was taken in this run")
    return lines


def describe_report(report: EvalReport) -> List[str]:
    spec = report.spec
    lines = [
        "", "EXPERIMENT:",
        f"   Mode: {spec.get('mode')}  Task: {spec.get('task')}",
        f"   {spec.get('source_lang')} -> {spec.get('target_lang')}"
        f"  (k={spec.get('few_shot_k', 0)})",
        "", "PER SEED:",
    ]
    for result in report.per_seed:
        shown = "  ".join(f"{name}={value:.4f}" for name, value in sorted(result.metrics.items()))
        lines.append(f"   seed {result.seed}: {shown}  steps={result.optimizer_steps}")
    lines += ["", "MEAN ± STD:"]
    lines += [f"   {name}: {report.mean[name]:.4f} ± {report.std[name]:.4f}"
              for name in sorted(report.mean)]
    datasets = report.provenance.get("datasets", {})
    if datasets:
        lines += ["", "DATASETS:"]
        lines += [f"   {name}: {digest[:16]}" for name, digest in sorted(datasets.items())]
    return lines


def describe_ablation(table: pd.DataFrame) -> List[str]:
    axis = table["axis"].iloc[0] if "axis" in table and len(table) else "?"
    metrics = [c for c in table.columns if c not in NON_METRIC_COLUMNS]
    lines = ["", f"ABLATION OVER {axis}:"]
    for metric in metrics:
        lines.append(f"   {metric}:")
        for row in summarize(table, metric).itertuples(index=False):
            lines.append(f"      {row.value}: {row.mean:.4f} ± {row.std:.4f} ({row.seeds} seeds)")
    return lines


def render_report(run_dir: Path) -> str:
    """Human-readable summary of whatever results ``run_dir`` holds"""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise DataError(f"Run directory {run_dir} not found")

    lines = [RULE, f"RUN RESULTS: {run_dir}", RULE]
    found = False
    if (run_dir / REPORT_FILE).exists():
        lines += describe_report(EvalReport.load(run_dir / REPORT_FILE))
        found = True
    if (run_dir / ABLATION_FILE).exists():
        lines += describe_ablation(load_ablation(run_dir))
        found = True
    if not found:
        raise DataError(f"No {REPORT_FILE} or {ABLATION_FILE} in {run_dir}")
    lines += describe_log(load_metrics_log(run_dir))
    lines += ["", RULE]
    return "\n".join(lines)


def main():
    if len(sys.argv) != 2:
        print("Usage: pcode-report <run_dir>")
        print("Example: pcode-report runs/train/3f9a1c2b7d4e")
        sys.exit(2)

    try:
        print(render_report(Path(sys.argv[1])))
    except PcodeError as e:
        print(f"Error: {e}")
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
