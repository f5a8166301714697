"""
Pydantic models for task records and dataset splits.

This module defines the generic line-delimited record format every task corpus is
converted to, plus the split container written by ``prepare-data``.
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import jsonlines
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TaskName = Literal["cd", "cs", "mnp", "cm", "cg"]

CLASSIFICATION_TASKS = ("cd", "cs", "mnp")

# (code fields, natural-language fields) per task
FIELD_KINDS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "cd": (("x1", "x2"), ()),
    "cs": (("x2",), ("x1",)),
    "mnp": (("x1",), ("x2",)),
    "cm": (("source",), ("target",)),
    "cg": (("target",), ("source",)),
}

REQUIRED_FIELDS: Dict[str, Tuple[str, ...]] = {
    "cd": ("x1", "x2", "label"),
    "cs": ("x1", "x2", "label"),
    "mnp": ("x1", "x2", "label"),
    "cm": ("source", "target"),
    "cg": ("source", "target"),
}

SPLIT_NAMES = ("train", "valid", "test")


class RawRecord(BaseModel):
    """
    One supervised example.

    Attributes:
        task: cd, cs, mnp (pair classification) or cm, cg (generation)
        lang: Programming language of the code side
        id: Identifier unique within a file
        x1, x2: Pair members for classification tasks
        source, target: Input and output text for generative tasks
        label: 1 (positive) or 0 (negative) for classification tasks
    """

    model_config = ConfigDict(extra="forbid")

    task: TaskName
    lang: str = Field(..., min_length=1)
    id: str = Field(..., min_length=1)
    x1: Optional[str] = None
    x2: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None
    label: Optional[Literal[0, 1]] = None

    @field_validator("lang")
    @classmethod
    def normalize_lang(cls, v: str) -> str:
        return v.strip().lower()

    @model_validator(mode="after")
    def validate_task_fields(self) -> "RawRecord":
        """Ensure the fields the task needs are present and the others absent."""
        missing = [name for name in REQUIRED_FIELDS[self.task] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"missing required field '{missing[0]}' for task {self.task}")
        unused = {"x1", "x2", "source", "target", "label"} - set(REQUIRED_FIELDS[self.task])
        present = sorted(name for name in unused if getattr(self, name) is not None)
        if present:
            raise ValueError(f"field '{present[0]}' is not used by task {self.task}")
        return self

    @property
    def is_classification(self) -> bool:
        return self.task in CLASSIFICATION_TASKS

    def code_fields(self) -> Tuple[str, ...]:
        return FIELD_KINDS[self.task][0]

    def nl_fields(self) -> Tuple[str, ...]:
        return FIELD_KINDS[self.task][1]

    def to_jsonl_dict(self) -> dict:
        """Flat dictionary without absent fields, as written to JSONL."""
        return self.model_dump(exclude_none=True)

    def pair_key(self) -> Tuple[str, str]:
        return (self.x1 or "", self.x2 or "")


class FilterStats(BaseModel):
    """Counts reported by the length filter"""

    total: int = 0
    kept: int = 0
    dropped_short: int = 0
    dropped_long: int = 0
    dropped_nl_long: int = 0


class Provenance(BaseModel):
    """Everything needed to reproduce a DatasetSplit"""

    seed: int
    task: Optional[str] = None
    source_files: Dict[str, str] = Field(default_factory=dict, description="path -> sha256")
    counts: Dict[str, int] = Field(default_factory=dict)
    label_counts: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    filter_stats: Optional[FilterStats] = None
    config: Dict = Field(default_factory=dict)
    split_hashes: Dict[str, str] = Field(default_factory=dict)


class DatasetSplit(BaseModel):
    """Train / valid / test partitions of one task-language corpus."""

    train: List[RawRecord] = Field(default_factory=list)
    valid: List[RawRecord] = Field(default_factory=list)
    test: List[RawRecord] = Field(default_factory=list)
    provenance: Optional[Provenance] = None

    @model_validator(mode="after")
    def validate_disjoint(self) -> "DatasetSplit":
        """Ensure no id appears in more than one partition (or twice in one)."""
        ids = [r.id for name in SPLIT_NAMES for r in getattr(self, name)]
        if len(ids) != len(set(ids)):
            seen, duplicates = set(), set()
            for record_id in ids:
                (duplicates if record_id in seen else seen).add(record_id)
            raise ValueError(f"Duplicate record ids across splits: {sorted(duplicates)[:10]}")
        return self

    def part(self, name: str) -> List[RawRecord]:
        return getattr(self, name)

    def all_records(self) -> List[RawRecord]:
        return self.train + self.valid + self.test

    def split_hash(self, name: str) -> str:
        return records_sha256(self.part(name))

    def write(self, out_dir: Path) -> Dict[str, Path]:
        """Write ``train/valid/test.jsonl`` and ``provenance.json``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name in SPLIT_NAMES:
            paths[name] = out_dir / f"{name}.jsonl"
            save_records(self.part(name), paths[name])
        if self.provenance is not None:
            self.provenance.split_hashes = {name: self.split_hash(name) for name in SPLIT_NAMES}
            paths["provenance"] = out_dir / "provenance.json"
            paths["provenance"].write_text(
                json.dumps(self.provenance.model_dump(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        return paths

    @classmethod
    def read(cls, split_dir: Path) -> "DatasetSplit":
        """Load a split directory written by ``write``; missing parts are empty."""
        from pcode_data.records import load_records

        split_dir = Path(split_dir)
        parts = {}
        for name in SPLIT_NAMES:
            path = split_dir / f"{name}.jsonl"
            parts[name] = load_records(path) if path.exists() else []
        provenance = None
        if (split_dir / "provenance.json").exists():
            provenance = Provenance(**json.loads((split_dir / "provenance.json").read_text()))
        return cls(provenance=provenance, **parts)

    def get_statistics(self) -> dict:
        """Per-partition counts and label distribution."""
        stats = {}
        for name in SPLIT_NAMES:
            records = self.part(name)
            labels = {"0": 0, "1": 0}
            for r in records:
                if r.label is not None:
                    labels[str(r.label)] += 1
            stats[name] = {"records": len(records), "labels": labels}
        return stats


def record_line(record: RawRecord) -> str:
    return json.dumps(record.to_jsonl_dict(), ensure_ascii=False, sort_keys=True)


def records_sha256(records: List[RawRecord]) -> str:
    digest = hashlib.sha256()
    for record in records:
        digest.update(record_line(record).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_records(records: List[RawRecord], path: Path) -> None:
    """Write records as JSONL with sorted keys (byte-stable for identical input)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with jsonlines.open(path, mode="w", sort_keys=True, compact=True) as writer:
        for record in records:
            writer.write(record.to_jsonl_dict())
