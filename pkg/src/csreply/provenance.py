"""Content fingerprints and artifact metadata headers."""

from __future__ import annotations

import hashlib
from pathlib import Path

ARTIFACT_VERSION = 1


def fingerprint_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint_text(text: str) -> str:
    return fingerprint_bytes(text.encode("utf-8"))


def fingerprint_file(path: str | Path) -> str:
    return fingerprint_bytes(Path(path).read_bytes())


def artifact_meta(config_fingerprint: str, input_fingerprints: dict[str, str]) -> dict:
    """Provenance header embedded in every artifact the CLI writes."""
    return {
        "version": ARTIFACT_VERSION,
        "config_fingerprint": config_fingerprint,
        "input_fingerprints": dict(sorted(input_fingerprints.items())),
    }
