"""Output bundles: atomic file writes and run manifests."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def atomic_write(path, text: str) -> None:
    """Write through a temp file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def timestamp() -> str:
    # reproducible builds convention: a pinned epoch makes manifests byte-stable
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


@dataclass
class RunManifest:
    command: list[str]
    seeds: dict
    inputs: dict[str, str] = field(default_factory=dict)  # file name -> sha256
    outputs: dict[str, str] = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    version: str = __version__

    def to_dict(self) -> dict:
        return {"tool": "snakeopt", "version": self.version, "command": self.command, "seeds": self.seeds,
                "inputs": self.inputs, "outputs": self.outputs, "started": self.started,
                "finished": self.finished}


class Bundle:
    """Collects outputs in memory and commits them at the end, so failures leave nothing behind."""

    def __init__(self, out_dir, manifest_name: str = "manifest.json"):
        self.out_dir = Path(out_dir)
        self.manifest_name = manifest_name
        self.files: dict[str, str] = {}
        self.main: str | None = None  # file name of the primary output, when --out names a file

    def add(self, name: str, text: str) -> None:
        if Path(name).is_absolute() or ".." in Path(name).parts:
            raise ValueError(f"bundle file {name!r} must stay inside the output directory")
        if self.main and name != self.main:
            # companions of a named output share its stem, so runs in one directory do not collide
            name = f"{Path(self.main).stem}.{name}"
        self.files[name] = text

    def add_json(self, name: str, obj) -> None:
        self.add(name, json.dumps(obj, sort_keys=True, indent=1) + "\n")

    def commit(self, manifest: RunManifest) -> list[Path]:
        written = []
        for name in sorted(self.files):
            p = self.out_dir / name
            atomic_write(p, self.files[name])
            manifest.outputs[name] = sha256_bytes(self.files[name].encode())
            written.append(p)
        manifest.finished = timestamp()
        mp = self.out_dir / self.manifest_name
        atomic_write(mp, json.dumps(manifest.to_dict(), sort_keys=True, indent=1) + "\n")
        written.append(mp)
        return written
