"""
Checkpoint archive: a directory with ``manifest.json`` plus one raw little-endian
row-major binary file per named array.

The same format doubles as the adapter for externally pretrained weights: export
the external model's arrays under the encoder's parameter names, add
``vocab.json``, and load it with ``load_pretrained_archive``.
"""
import json
import subprocess
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch
from loguru import logger

from pcode_backend.config import ModelConfig
from pcode_backend.model import CodeEncoder
from pcode_backend.store import ParameterStore
from pcode_backend.vocab import Vocabulary
from pcode_config import __version__
from pcode_config.errors import DataError, IncompatibleCheckpointError

SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
VOCAB_FILE = "vocab.json"
ARRAY_DIR = "arrays"
OPTIMIZER_PREFIX = "optimizer.state."


def version_string() -> str:
    """Package version plus ``git describe`` output when available"""
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"{__version__}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_array(path: Path, array: np.ndarray) -> str:
    little = array.astype(array.dtype.newbyteorder("<"), copy=False)
    np.ascontiguousarray(little).tofile(path)
    return array.dtype.name


def _read_array(path: Path, dtype: str, shape: List[int]) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.dtype(dtype).newbyteorder("<"))
    expected = int(np.prod(shape)) if shape else 1
    if raw.size != expected:
        raise IncompatibleCheckpointError([f"{path.name} (has {raw.size} values, expected {expected})"])
    return raw.astype(np.dtype(dtype), copy=False).reshape(shape)


def _flatten_optimizer(state: Optional[Dict[str, Any]]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Split a torch optimizer state dict into named arrays and JSON-able scalars"""
    if not state:
        return {}, {}
    arrays: Dict[str, np.ndarray] = {}
    scalars: Dict[str, Any] = {"param_groups": state.get("param_groups", []), "state": {}}
    for idx, slots in state.get("state", {}).items():
        plain = {}
        for key, value in slots.items():
            if torch.is_tensor(value):
                arrays[f"{OPTIMIZER_PREFIX}{idx}.{key}"] = value.detach().cpu().numpy().copy()
            else:
                plain[key] = value
        scalars["state"][str(idx)] = plain
    return arrays, scalars


def _unflatten_optimizer(store: ParameterStore, scalars: Dict[str, Any]) -> Optional[Dict[str, Any]]:
    if not scalars:
        return None
    state: Dict[int, Dict[str, Any]] = {}
    for idx, plain in scalars.get("state", {}).items():
        state[int(idx)] = dict(plain)
    for name, array in store.items():
        if not name.startswith(OPTIMIZER_PREFIX):
            continue
        idx, key = name[len(OPTIMIZER_PREFIX):].split(".", 1)
        state.setdefault(int(idx), {})[key] = torch.from_numpy(np.array(array, copy=True))
    return {"state": state, "param_groups": scalars.get("param_groups", [])}


def save_checkpoint(
    path: Path,
    params: ParameterStore,
    optimizer_state: Optional[Dict[str, Any]] = None,
    metadata: Optional[Dict[str, Any]] = None,
    model_config: Optional[ModelConfig] = None,
    vocab: Optional[Vocabulary] = None,
    prompt_bank_shape: Optional[List[int]] = None,
) -> Path:
    """
    Write ``params`` (and optionally optimizer state) as an archive directory.

    Returns the archive path.
    """
    path = Path(path)
    array_dir = path / ARRAY_DIR
    array_dir.mkdir(parents=True, exist_ok=True)

    optimizer_arrays, optimizer_scalars = _flatten_optimizer(optimizer_state)
    entries = []
    for name, array in list(params.items()) + list(optimizer_arrays.items()):
        filename = f"{name}.bin"
        dtype = _write_array(array_dir / filename, array)
        entries.append({"name": name, "file": filename, "shape": list(array.shape), "dtype": dtype})

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "version": version_string(),
        "model_config": model_config.model_dump() if model_config else None,
        "vocab_sha256": vocab.sha256() if vocab else None,
        "prompt_bank_shape": prompt_bank_shape,
        "arrays": entries,
        "optimizer": optimizer_scalars,
        "metadata": metadata or {},
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2, default=str), encoding="utf-8")
    if vocab is not None:
        vocab.save(path / VOCAB_FILE)
    logger.info(f"Saved checkpoint with {len(entries)} arrays to {path}")
    return path


def read_manifest(path: Path) -> Dict[str, Any]:
    manifest_path = Path(path) / MANIFEST
    if not manifest_path.exists():
        raise DataError(f"No {MANIFEST} in {path}")
    return json.loads(manifest_path.read_text(encoding="utf-8"))


def load_checkpoint(
    path: Path,
    expected_config: Optional[ModelConfig] = None,
    expected_vocab_sha256: Optional[str] = None,
) -> Tuple[ParameterStore, Optional[Dict[str, Any]], Dict[str, Any]]:
    """
    Read an archive back as (ParameterStore, optimizer_state, manifest).

    When expectations are given, any config field or vocabulary hash mismatch
    raises IncompatibleCheckpointError naming every offending entry.
    """
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise IncompatibleCheckpointError([f"schema_version={manifest.get('schema_version')}"])

    offending = []
    if expected_vocab_sha256 is not None and manifest.get("vocab_sha256") != expected_vocab_sha256:
        offending.append("vocab_sha256")
    if expected_config is not None:
        saved = manifest.get("model_config") or {}
        for key, value in expected_config.model_dump().items():
            if saved.get(key) != value:
                offending.append(f"model_config.{key}")
    if offending:
        raise IncompatibleCheckpointError(offending)

    arrays = ParameterStore()
    optimizer_arrays = ParameterStore()
    for entry in manifest["arrays"]:
        array = _read_array(path / ARRAY_DIR / entry["file"], entry["dtype"], entry["shape"])
        target = optimizer_arrays if entry["name"].startswith(OPTIMIZER_PREFIX) else arrays
        target[entry["name"]] = array
    optimizer_state = _unflatten_optimizer(optimizer_arrays, manifest.get("optimizer") or {})
    return arrays, optimizer_state, manifest


def save_pretrained_archive(path: Path, encoder: CodeEncoder, vocab: Vocabulary,
                            metadata: Optional[Dict[str, Any]] = None) -> Path:
    return save_checkpoint(
        path,
        ParameterStore.from_modules(encoder=encoder),
        metadata=metadata,
        model_config=encoder.config,
        vocab=vocab,
    )


def load_pretrained_archive(path: Path) -> Tuple[ModelConfig, Vocabulary, CodeEncoder]:
    """Build an encoder from an archive holding ``encoder.*`` arrays and ``vocab.json``"""
    path = Path(path)
    store, _, manifest = load_checkpoint(path)
    if not manifest.get("model_config"):
        raise IncompatibleCheckpointError(["model_config (absent)"])
    config = ModelConfig(**manifest["model_config"])
    vocab = Vocabulary.load(path / VOCAB_FILE)
    if manifest.get("vocab_sha256") not in (None, vocab.sha256()):
        raise IncompatibleCheckpointError(["vocab_sha256"])
    if vocab.size != config.vocab_size:
        raise IncompatibleCheckpointError([f"vocab_size ({vocab.size} != {config.vocab_size})"])
    encoder = CodeEncoder(config)
    store.load_into(encoder, prefix="encoder.")
    logger.info(f"Loaded pretrained encoder from {path} ({manifest.get('version')})")
    return config, vocab, encoder
