"""Run manifests: a small JSON sidecar written next to every artifact so a
result can be traced back to the exact inputs and invocation."""

from __future__ import annotations

import hashlib
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version

from .dataio import SCHEMA_VERSION


def _tool_version() -> str:
    try:
        return version("adagpca")
    except PackageNotFoundError:  # pragma: no cover - running from a checkout
        return "0.0.0+local"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class ManifestTimer:
    """Collects inputs and timing for one command invocation."""

    def __init__(self, seed=None, rng: str = None):
        self.started = time.perf_counter()
        self.inputs = {}
        self.seed = seed
        self.rng = rng

    def add_input(self, path) -> None:
        if path is not None:
            self.inputs[str(path)] = file_digest(path)

    def write(self, artifact_path) -> str:
        doc = {
            "command": sys.argv,
            "inputs": self.inputs,
            "seed": self.seed,
            "schema_version": SCHEMA_VERSION,
            "tool_version": _tool_version(),
            "wall_time_s": round(time.perf_counter() - self.started, 6),
        }
        if self.rng:
            doc["rng"] = self.rng
        sidecar = f"{artifact_path}.manifest.json"
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        return sidecar
