from __future__ import annotations

from pathlib import Path


def ensure_dir(path: Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def is_json_path(path: Path) -> bool:
    return Path(path).suffix.lower() == ".json"
