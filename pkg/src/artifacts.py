# src/artifacts.py
"""
CSV and manifest writers.

Every CSV starts with one `#` line naming its manifest, seed, RNG and tool
version, then a header row; reals use 17 significant digits and LF endings.
Manifests are sorted-key JSON without timestamps, so identical runs give
identical bytes.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.config import CSV_FLOAT_FORMAT, RNG_ALGORITHM, TOOL_NAME, TOOL_VERSION
from src.core import RatchetParams
from src.deterministic import TypeProfile
from src.errors import RatchetValueError

logger = logging.getLogger(__name__)


# =============================================================================
# Manifest
# =============================================================================
def params_dict(p: RatchetParams) -> Dict[str, Any]:
    return {"N": int(p.N), "lambda": float(p.lam), "s": float(p.s)}


def build_manifest(kind: str, seed: Optional[int], **fields: Any) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "rng": RNG_ALGORITHM,
        "kind": kind,
        "seed": seed,
    }
    out.update(fields)
    return out


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else str(f)
    if isinstance(value, Path):
        return str(value)
    return value


def manifest_text(manifest: Dict[str, Any]) -> str:
    return json.dumps(_jsonable(manifest), sort_keys=True, indent=2) + "\n"


def manifest_reference(manifest_name: str, manifest: Dict[str, Any]) -> str:
    return (
        f"# manifest={manifest_name} seed={manifest.get('seed')} "
        f"rng={manifest.get('rng', RNG_ALGORITHM)} version={manifest.get('version', TOOL_VERSION)}"
    )


# =============================================================================
# Files
# =============================================================================
def write_csv(frame: pd.DataFrame, path: Path, reference: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(reference.rstrip("\n") + "\n")
        frame.to_csv(fh, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read an artifact CSV, skipping `#` comment lines."""
    return pd.read_csv(path, comment="#")


def write_manifest(manifest: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest_text(manifest))
    return path


def read_profile(path: Path) -> TypeProfile:
    """Profile CSV with columns absolute_class_index, frequency (contiguous classes)."""
    frame = read_csv(path)
    missing = {"absolute_class_index", "frequency"} - set(frame.columns)
    if missing:
        raise RatchetValueError(
            f"Profile file {path} is missing column(s): {', '.join(sorted(missing))}"
        )
    frame = frame.sort_values("absolute_class_index")
    classes = frame["absolute_class_index"].to_numpy(dtype=int)
    if classes.size == 0 or np.any(np.diff(classes) != 1):
        raise RatchetValueError(f"Profile file {path} must list contiguous class indices.")
    return TypeProfile(offset=int(classes[0]), freqs=frame["frequency"].to_numpy(dtype=float))


class ArtifactWriter:
    """Writes `<prefix>.<name>.csv` files plus `<prefix>.manifest` for one command."""

    def __init__(self, prefix: str, manifest: Dict[str, Any]):
        self.prefix = Path(prefix)
        self.manifest = dict(manifest)
        self.paths: List[Path] = []

    @property
    def manifest_path(self) -> Path:
        return self.prefix.with_name(self.prefix.name + ".manifest")

    def csv_path(self, name: str) -> Path:
        if name == self.prefix.name:
            return self.prefix.with_name(f"{name}.csv")
        return self.prefix.with_name(f"{self.prefix.name}.{name}.csv")

    def write(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_csv(
            frame,
            self.csv_path(name),
            manifest_reference(self.manifest_path.name, self.manifest),
        )
        self.paths.append(path)
        return path

    def finish(self, **extra: Any) -> Path:
        self.manifest.update(extra)
        self.manifest["artifacts"] = sorted(p.name for p in self.paths)
        path = write_manifest(self.manifest, self.manifest_path)
        self.paths.append(path)
        return path
