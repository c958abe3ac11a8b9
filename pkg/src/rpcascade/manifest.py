"""Run manifests: every artifact gets a sidecar recording how it was made."""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import __version__
from .rng import FOLD_PRNG_NAME


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list[str] = field(default_factory=lambda: list(sys.argv))
    tool_version: str = __version__
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    prng: dict[str, str] = field(default_factory=lambda: {"folds": FOLD_PRNG_NAME})
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def add_input(self, path: str | os.PathLike):
        self.inputs[str(path)] = sha256_file(path)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def manifest_path(artifact_path: str | os.PathLike) -> str:
    return str(artifact_path) + ".manifest.json"


def write_manifest(artifact_path: str | os.PathLike, manifest: RunManifest) -> str:
    """Write the sidecar next to the artifact; returns the sidecar path."""
    path = manifest_path(artifact_path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return path
