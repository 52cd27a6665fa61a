"""Run manifests: every CLI invocation records what ran, on what, with what.

Re-running a subcommand with the inputs and config recorded in a manifest
reproduces the outputs byte-identically for all deterministic stages.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .ioutils import sha256_file


@dataclass
class RunManifest:
    subcommand: str
    config: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    version: str = __version__
    started_utc: str = ""
    wall_time_s: float = 0.0
    status: str = "ok"
    error: str | None = None

    _t0: float = field(default=0.0, repr=False)

    @classmethod
    def start(cls, subcommand: str, config: dict, seed: int | None = None) -> "RunManifest":
        manifest = cls(subcommand=subcommand, config=config, seed=seed)
        manifest.started_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")
        manifest._t0 = time.perf_counter()
        return manifest

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def fail(self, message: str) -> None:
        self.status = "error"
        self.error = message

    def write(self, path: str | Path) -> None:
        self.wall_time_s = round(time.perf_counter() - self._t0, 3)
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.seed,
            "version": self.version,
            "started_utc": self.started_utc,
            "wall_time_s": self.wall_time_s,
            "status": self.status,
            "error": self.error,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
