"""
EvalReport: per-seed metrics, their mean and std, and provenance hashes.
"""
import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from pcode_config.errors import DataError


class SeedResult(BaseModel):
    """Outcome of one seeded run"""

    seed: int
    metrics: Dict[str, float]
    optimizer_steps: int = 0
    best_epoch: int = 0
    checkpoint_sha256: str = ""
    seen_record_ids: int = Field(default=0, description="Distinct record ids that entered an optimizer step")


def aggregate(per_seed: List[SeedResult]) -> Dict[str, Dict[str, float]]:
    """Mean and population std (ddof=0) of every metric across seeds"""
    names = sorted({name for result in per_seed for name in result.metrics})
    mean, std = {}, {}
    for name in names:
        values = np.array([r.metrics[name] for r in per_seed if name in r.metrics], dtype=float)
        mean[name] = float(values.mean())
        std[name] = float(values.std(ddof=0))
    return {"mean": mean, "std": std}


class EvalReport(BaseModel):
    """
    Aggregated result of one experiment.

    ``mean`` and ``std`` are always recomputable from ``per_seed``.
    """

    spec: Dict[str, Any]
    per_seed: List[SeedResult]
    mean: Dict[str, float] = Field(default_factory=dict)
    std: Dict[str, float] = Field(default_factory=dict)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_aggregates(self) -> "EvalReport":
        if not self.per_seed:
            raise ValueError("EvalReport needs at least one seed result")
        expected = aggregate(self.per_seed)
        if not self.mean and not self.std:
            self.mean, self.std = expected["mean"], expected["std"]
            return self
        for key in ("mean", "std"):
            given = getattr(self, key)
            if set(given) != set(expected[key]) or any(
                not np.isclose(given[k], expected[key][k], rtol=0, atol=1e-12) for k in given
            ):
                raise ValueError(f"Report {key} does not match per-seed values")
        return self

    @classmethod
    def from_seeds(cls, spec: Dict[str, Any], per_seed: List[SeedResult],
                   provenance: Dict[str, Any]) -> "EvalReport":
        return cls(spec=spec, per_seed=per_seed, provenance=provenance)

    def to_frame(self) -> pd.DataFrame:
        """One row per seed"""
        rows = [{"seed": r.seed, **r.metrics, "optimizer_steps": r.optimizer_steps}
                for r in self.per_seed]
        return pd.DataFrame(rows)

    def summary_line(self) -> str:
        return ", ".join(f"{name}={self.mean[name]:.4f}±{self.std[name]:.4f}"
                         for name in sorted(self.mean))

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.model_dump(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "EvalReport":
        path = Path(path)
        if not path.exists():
            raise DataError(f"Report not found: {path}")
        return cls.model_validate_json(path.read_text(encoding="utf-8"))
