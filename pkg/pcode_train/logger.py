"""
Run logging: loguru sinks plus the per-run metrics log.
"""
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonlines
from loguru import logger

METRICS_FILE = "metrics.jsonl"
SUMMARY_FILE = "summary.json"
LOG_FILE = "run.log.jsonl"


def configure_logging(level: str = "INFO", json_path: Optional[Path] = None) -> None:
    """Reset loguru to a stderr sink, plus a serialized file sink when ``json_path`` is set"""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(),
               format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}")
    if json_path is not None:
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        logger.add(str(json_path), level="DEBUG", serialize=True)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunLogger:
    """
    Owns one run directory.

    Each metric record is appended to ``metrics.jsonl`` with the run id, seed,
    epoch and optimizer step counter, so whether any optimizer step happened is
    readable from the log alone.
    """

    def __init__(self, run_dir: Path, run_id: str):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.run_id = run_id
        self.metrics_path = self.run_dir / METRICS_FILE
        self.records: List[Dict[str, Any]] = []

    def log(self, event: str, seed: Optional[int] = None, epoch: Optional[int] = None,
            step: int = 0, **values: Any) -> Dict[str, Any]:
        record = {
            "timestamp": _now(),
            "run_id": self.run_id,
            "event": event,
            "seed": seed,
            "epoch": epoch,
            "optimizer_step": step,
            **values,
        }
        self.records.append(record)
        with jsonlines.open(self.metrics_path, mode="a", sort_keys=True) as writer:
            writer.write(record)
        return record

    def log_epoch(self, seed: Optional[int], epoch: int, step: int, **metrics: Any) -> Dict[str, Any]:
        shown = ", ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in metrics.items())
        logger.info(f"[seed {seed}] epoch {epoch} step {step}: {shown}")
        return self.log("epoch", seed=seed, epoch=epoch, step=step, **metrics)

    def optimizer_steps(self) -> int:
        """Largest optimizer step counter recorded in this run"""
        if not self.metrics_path.exists():
            return 0
        with jsonlines.open(self.metrics_path) as reader:
            return max((int(r.get("optimizer_step") or 0) for r in reader), default=0)

    def save_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.run_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n",
                        encoding="utf-8")
        return path

    def save_summary(self, payload: Dict[str, Any]) -> Path:
        path = self.save_json(SUMMARY_FILE, {"run_id": self.run_id, **payload})
        logger.info(f"Results saved to: {path}")
        return path
