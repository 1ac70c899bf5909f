"""Run manifests: what produced the files in an output directory.

Every ``gpas`` command writes ``manifest.json`` beside its outputs with the
command name, the resolved configuration, the seed, the package version and
a git-style blob hash of every input file. The manifest holds no timestamps,
so two identical runs write identical manifests.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from gpas_summarizer.exceptions import SerializationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.serializer import read_json, write_json

_log = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


def blob_sha1(path: str | Path) -> str:
    """``sha1("blob <len>\\0" + bytes)``, the hash ``git hash-object`` prints."""
    data = Path(path).read_bytes()
    digest = hashlib.sha1(usedforsecurity=False)
    digest.update(b"blob %d\0" % len(data))
    digest.update(data)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    version: str
    seed: int | None = None
    config: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RunManifest:
        try:
            return cls(
                command=str(data["command"]),
                version=str(data["version"]),
                seed=data.get("seed"),
                config=dict(data.get("config") or {}),
                inputs=dict(data.get("inputs") or {}),
            )
        except (KeyError, TypeError) as exc:
            msg = f"malformed manifest: {exc}"
            raise SerializationError(msg) from exc


def write_manifest(
    out_dir: str | Path,
    command: str,
    *,
    version: str,
    seed: int | None = None,
    config: Mapping[str, Any] | None = None,
    inputs: Mapping[str, str | Path] | None = None,
) -> Path:
    """Hash ``inputs`` (role -> path) and write the manifest into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hashes = {role: blob_sha1(path) for role, path in sorted((inputs or {}).items()) if Path(path).is_file()}
    manifest = RunManifest(command=command, version=version, seed=seed, config=dict(config or {}), inputs=hashes)
    path = out / MANIFEST_NAME
    write_json(manifest.to_dict(), path)
    _log.debug("manifest.written", path=str(path), command=command, inputs=len(hashes))
    return path


def read_manifest(path: str | Path) -> RunManifest:
    target = Path(path)
    if target.is_dir():
        target = target / MANIFEST_NAME
    return RunManifest.from_dict(read_json(target))
