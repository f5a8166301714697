"""
Line-delimited JSON record loading with per-line validation.
"""
import json
from pathlib import Path
from typing import List, Tuple

from loguru import logger
from pydantic import ValidationError

from pcode_config.errors import DataError, RecordValidationError
from pcode_data.schema import RawRecord


def _describe(error: ValidationError) -> List[Tuple[str, str]]:
    problems = []
    for item in error.errors():
        field = ".".join(str(part) for part in item.get("loc", ())) or "record"
        message = item.get("msg", "invalid")
        if item.get("type") == "missing":
            message = f"missing required field '{field}'"
        problems.append((field, message))
    return problems


def load_records(path: Path) -> List[RawRecord]:
    """
    Read and validate one RawRecord per non-empty line.

    All problems in the file are collected first; any problem raises
    RecordValidationError listing (line, field, message) for each.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Record file not found: {path}")

    records: List[RawRecord] = []
    problems: List[Tuple[int, str, str]] = []
    first_line_of: dict = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                problems.append((lineno, "json", f"malformed JSON: {e.msg}"))
                continue
            if not isinstance(data, dict):
                problems.append((lineno, "record", "expected a JSON object"))
                continue
            try:
                record = RawRecord.model_validate(data)
            except ValidationError as e:
                problems.extend((lineno, field, message) for field, message in _describe(e))
                continue
            if record.id in first_line_of:
                problems.append((lineno, "id", f"duplicate id {record.id!r} "
                                               f"(first seen on line {first_line_of[record.id]})"))
                continue
            first_line_of[record.id] = lineno
            records.append(record)

    if problems:
        for line_no, field, message in problems[:20]:
            logger.error(f"{path}:{line_no}: {field}: {message}")
        raise RecordValidationError(str(path), problems)
    logger.info(f"Loaded {len(records)} records from {path}")
    return records
