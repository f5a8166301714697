"""
ParameterStore: named parameter arrays detached from any module.
"""
from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np
import torch
from torch import nn

from pcode_config.errors import IncompatibleCheckpointError


class ParameterStore:
    """
    Ordered mapping name -> numpy array.

    Names are module parameter names with a component prefix, e.g.
    ``encoder.layers.0.attention.query.weight`` or ``prompt.prompt_embeddings``.
    """

    def __init__(self, arrays: Optional[Mapping[str, np.ndarray]] = None):
        self._arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for name, array in (arrays or {}).items():
            self[name] = array

    def __setitem__(self, name: str, array: np.ndarray) -> None:
        if name in self._arrays:
            raise KeyError(f"Duplicate parameter name: {name}")
        self._arrays[name] = np.ascontiguousarray(array)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: object) -> bool:
        return name in self._arrays

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self._arrays.items())

    def shapes(self) -> Dict[str, List[int]]:
        return {name: list(arr.shape) for name, arr in self._arrays.items()}

    def with_prefix(self, prefix: str) -> "ParameterStore":
        """Sub-store of names starting with ``prefix``, prefix stripped"""
        return ParameterStore(
            {name[len(prefix):]: arr for name, arr in self._arrays.items() if name.startswith(prefix)}
        )

    @classmethod
    def from_modules(cls, **modules: Optional[nn.Module]) -> "ParameterStore":
        """Snapshot parameters of each module under ``<key>.`` prefixes"""
        store = cls()
        for key, module in modules.items():
            if module is None:
                continue
            for name, param in module.named_parameters():
                store[f"{key}.{name}"] = param.detach().cpu().numpy().copy()
        return store

    def load_into(self, module: nn.Module, prefix: str = "") -> None:
        """
        Copy arrays into ``module`` in place.

        Raises IncompatibleCheckpointError listing every missing, unexpected or
        mis-shaped name.
        """
        sub = self.with_prefix(prefix) if prefix else self
        params = dict(module.named_parameters())
        offending = [f"{prefix}{n} (missing)" for n in params if n not in sub]
        offending += [f"{prefix}{n} (unexpected)" for n in sub if n not in params]
        for name, param in params.items():
            if name in sub and tuple(sub[name].shape) != tuple(param.shape):
                offending.append(
                    f"{prefix}{name} (shape {list(sub[name].shape)} != {list(param.shape)})"
                )
        if offending:
            raise IncompatibleCheckpointError(offending)
        with torch.no_grad():
            for name, param in params.items():
                param.copy_(torch.from_numpy(np.array(sub[name], copy=True)).to(param.dtype))

    def equals(self, other: "ParameterStore") -> bool:
        """Bitwise equality of names, shapes, dtypes and contents"""
        if list(self) != list(other):
            return False
        return all(
            a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
            for (_, a), (_, b) in zip(self.items(), other.items())
        )
