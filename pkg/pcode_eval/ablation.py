"""
Controlled ablations: vary one axis of an experiment, keep everything else fixed.
"""
from dataclasses import replace
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import pandas as pd
from loguru import logger

from pcode_config.errors import ConfigError
from pcode_eval.experiment import ExperimentSetup, ExperimentSpec, LayoutConfig, run_experiment
from pcode_prompt.layout import PROMPT_MODES

ABLATION_AXES = ("prompt_position", "prompt_count", "source_language")
PROMPT_COUNT_RANGE = (1, 20)


def _sort_key(axis: str, value: Any) -> Any:
    if axis == "prompt_position":
        return PROMPT_MODES.index(value)
    return value


def variants(spec: ExperimentSpec, setup: ExperimentSetup, axis: str,
             values: Sequence[Any]) -> List[Tuple[Any, ExperimentSpec]]:
    """One spec per value, sorted by value; unknown axes and bad values are rejected"""
    if axis not in ABLATION_AXES:
        raise ConfigError(f"Unknown ablation axis {axis!r}; expected one of {ABLATION_AXES}")
    if not values:
        raise ConfigError(f"No values given for ablation axis {axis}")
    base_layout = spec.layout or setup.layout
    out = []
    for value in values:
        if axis == "prompt_position":
            if value not in PROMPT_MODES:
                raise ConfigError(f"Prompt position {value!r} not in {PROMPT_MODES}")
            varied = spec.model_copy(update={"layout": base_layout.model_copy(update={"mode": value})})
        elif axis == "prompt_count":
            value = int(value)
            low, high = PROMPT_COUNT_RANGE
            if not low <= value <= high:
                raise ConfigError(f"Prompt count {value} outside [{low}, {high}]")
            varied = spec.model_copy(update={"layout": base_layout.model_copy(update={"m": value})})
        else:
            value = str(value).lower()
            varied = spec.model_copy(update={"source_lang": value})
        out.append((value, varied))
    return sorted(out, key=lambda item: _sort_key(axis, item[0]))


def default_values(axis: str) -> List[Any]:
    if axis == "prompt_position":
        return list(PROMPT_MODES)
    if axis == "prompt_count":
        return [1, 5, 10, 15, 20]
    raise ConfigError(f"Axis {axis!r} has no default values; pass them explicitly")


def ablate(
    spec: ExperimentSpec,
    setup: ExperimentSetup,
    axis: str,
    values: Optional[Sequence[Any]] = None,
    out_csv: Optional[Path] = None,
) -> pd.DataFrame:
    """
    Run the experiment once per axis value (every seed each) and tabulate one row
    per (value, seed), sorted by value.
    """
    values = list(values) if values is not None else default_values(axis)
    rows = []
    for value, varied in variants(spec, setup, axis, values):
        run_dir = setup.run_dir / f"{axis}={value}" if setup.run_dir else None
        report = run_experiment(varied, replace(setup, run_dir=run_dir))
        datasets = report.provenance.get("datasets", {})
        for result in report.per_seed:
            rows.append({
                "axis": axis,
                "value": value,
                "seed": result.seed,
                **result.metrics,
                "optimizer_steps": result.optimizer_steps,
                "source_train_sha256": datasets.get("source_train", ""),
                "target_test_sha256": datasets.get("target_test", ""),
            })
        logger.info(f"{axis}={value}: {report.summary_line()}")

    table = pd.DataFrame(rows)
    if out_csv is not None:
        Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_csv, index=False)
        logger.info(f"Ablation table written to {out_csv}")
    return table


def summarize(table: pd.DataFrame, metric: str) -> pd.DataFrame:
    """Mean and population std of ``metric`` per axis value, in table order"""
    grouped = table.groupby("value", sort=False)[metric]
    return pd.DataFrame({"mean": grouped.mean(), "std": grouped.std(ddof=0),
                         "seeds": grouped.count()}).reset_index()
