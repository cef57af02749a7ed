"""Run manifests: the reproducibility record written next to every
artifact a command produces (what ran, with which config hash, seed, and
input fingerprints)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

MANIFEST_FORMAT = "hopcheck-run-manifest"
MANIFEST_VERSION = 1
MANIFEST_NAME = "run-manifest.json"

try:
    TOOL_VERSION = metadata.version("hopcheck")
except metadata.PackageNotFoundError:  # pragma: no cover - not installed
    TOOL_VERSION = "0.0.0+uninstalled"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def config_hash(payload: dict) -> str:
    """Order-independent hash of a JSON-serializable configuration."""
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    ).hexdigest()


def fingerprint_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """One command execution, reproducible from this record alone."""

    command: str
    config_hash: str
    seed: int
    dataset_fingerprints: dict[str, str] = field(default_factory=dict)
    preset_deviation: str | None = None
    tool_version: str = TOOL_VERSION
    started_at: str = field(default_factory=utc_now)
    finished_at: str | None = None

    def finish(self) -> "RunManifest":
        self.finished_at = utc_now()
        return self

    def to_dict(self) -> dict:
        return {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, payload: dict) -> "RunManifest":
        data = dict(payload)
        if data.pop("format", MANIFEST_FORMAT) != MANIFEST_FORMAT:
            raise ValueError("not a run manifest payload")
        data.pop("version", None)
        return cls(**data)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def manifest_path_for(output: str | Path) -> Path:
    """The manifest location next to an output file or directory."""
    output = Path(output)
    if output.is_dir():
        return output / MANIFEST_NAME
    return output.with_name(output.name + ".run-manifest.json")
