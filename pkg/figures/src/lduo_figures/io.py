"""Manifest-verified loading of solver artifacts."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


class HashMismatchError(RuntimeError):
    """An input file does not match the hash recorded in its manifest."""


def load_manifest(in_dir: Path) -> dict:
    path = Path(in_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json in {in_dir}")
    return json.loads(path.read_text())


def verify(in_dir: Path, name: str, manifest: dict) -> Path:
    path = Path(in_dir) / name
    if not path.exists():
        raise FileNotFoundError(path)
    want = manifest.get("outputs", {}).get(name)
    if want is None:
        raise HashMismatchError(f"{name} is not listed in the manifest")
    got = hashlib.sha256(path.read_bytes()).hexdigest()
    if got != want:
        raise HashMismatchError(
            f"{name}: sha256 {got[:12]}... does not match manifest "
            f"{want[:12]}... (stale or edited artifact)")
    return path


def verified_csv(in_dir: Path, name: str, manifest: dict,
                 skip_header: bool = False) -> np.ndarray:
    path = verify(in_dir, name, manifest)
    return np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0,
                      ndmin=2)


def verified_jsonl(in_dir: Path, name: str, manifest: dict) -> list[dict]:
    path = verify(in_dir, name, manifest)
    return [json.loads(line) for line in path.read_text().splitlines() if line]


def verified_json(in_dir: Path, name: str, manifest: dict) -> dict:
    path = verify(in_dir, name, manifest)
    return json.loads(path.read_text())
