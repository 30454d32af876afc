"""Run manifests and CSV emission.

Every command writes a JSON manifest next to its outputs: command name,
fully resolved config, seed, code version, schema version, the output file
list with content digests, and the wall-clock duration.  Re-running with
the same config and seed reproduces every output byte for byte (digests
make drift visible).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

SCHEMA_VERSION = 1

__all__ = ["RunManifest", "write_csv", "SCHEMA_VERSION"]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, complex):
        return f"{x.real:.15g}{x.imag:+.15g}j"
    return f"{float(x):.15g}"


def write_csv(path: Path, header: list[str], rows) -> Path:
    """CSV with >= 12 significant digits per float field."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    started: float = field(default_factory=time.time)
    outputs: list[dict] = field(default_factory=list)

    def add(self, path: Path):
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        self.outputs.append({"file": Path(path).name, "sha256": digest})

    def write(self, out_dir: Path) -> Path:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "config": self.config,
            "outputs": self.outputs,
            "duration_s": round(time.time() - self.started, 3),
        }
        path = Path(out_dir) / f"{self.command}.manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path
