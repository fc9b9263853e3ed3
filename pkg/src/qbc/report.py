"""Deterministic serialization and run manifests.

Floats are written with 17 significant digits so every binary64 value
round-trips exactly. Dict keys keep insertion order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from qbc import __version__


def _scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    return _scalar(obj)


def fmt(x: float) -> str:
    return _scalar(x)


def config_hash(config: dict) -> str:
    return hashlib.sha256(dumps(config, indent=0).encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    outputs: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0
    version: str = __version__

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def hash(self) -> str:
        """Identifies the run; wall time is excluded so reruns share it."""
        body = {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "outputs": self.outputs,
        }
        return hashlib.sha256(dumps(body, indent=0).encode()).hexdigest()

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "outputs": self.outputs,
            "manifest_hash": self.hash,
        }
        if timing:
            out["wall_time_s"] = self.wall_time_s
        return out
