# crn_osc/services/storage.py

import csv
import json
import logging
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Type, TypeVar

import numpy as np
from pydantic import BaseModel

from crn_osc.config import config
from crn_osc.models.network import CanonicalKey, Crn
from crn_osc.services.crn_model import format_crn, parse_crn_stanzas

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ModelT = TypeVar("ModelT", bound=BaseModel)


class KeyStore:
    """Set of canonical keys with thread-safe insert-if-absent."""

    def __init__(self, keys: Iterable[CanonicalKey] = ()):
        self._lock = threading.Lock()
        self._keys = set(keys)

    def insert(self, key: CanonicalKey) -> bool:
        """Add key; True if it was not already present."""
        with self._lock:
            if key in self._keys:
                return False
            self._keys.add(key)
            return True

    def __contains__(self, key: CanonicalKey) -> bool:
        with self._lock:
            return key in self._keys

    def __len__(self) -> int:
        with self._lock:
            return len(self._keys)

    def sorted_keys(self) -> List[CanonicalKey]:
        with self._lock:
            return sorted(self._keys, key=lambda k: k.data)


class StorageService:
    """Key files, network stanzas, JSON records and CSV tables under the storage tree."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root else config.STORAGE_DIR
        self.keys_dir = self.root / "keys" if root else config.KEYS_DIR
        self.records_dir = self.root / "records" if root else config.RECORDS_DIR
        self.trajectories_dir = self.root / "trajectories" if root else config.TRAJECTORIES_DIR
        self._ensure_directories()

    def _ensure_directories(self):
        try:
            for directory in (self.root, self.keys_dir, self.records_dir, self.trajectories_dir):
                directory.mkdir(parents=True, exist_ok=True)
            logger.debug("Storage directories ready under %s", self.root)
        except OSError as e:
            logger.error("Storage directory creation failed: %s", e)

    # -- key files ----------------------------------------------------------

    @staticmethod
    def write_key_file(keys: Iterable[CanonicalKey], path: Path) -> int:
        """
        Write keys as sorted, deduplicated lowercase hex lines.

        Returns:
            int: number of distinct keys written
        """
        lines = sorted({k.hex for k in keys})
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        logger.info("Wrote %d keys to %s", len(lines), path)
        return len(lines)

    @staticmethod
    def read_key_file(path: Path) -> List[CanonicalKey]:
        text = Path(path).read_text(encoding="utf-8")
        return [CanonicalKey.from_hex(line) for line in text.splitlines()
                if line.strip() and not line.startswith("#")]

    # -- network stanzas ----------------------------------------------------

    @staticmethod
    def write_crn_file(crns: Sequence[Crn], path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(format_crn(c) for c in crns), encoding="utf-8")

    @staticmethod
    def read_crn_file(path: Path) -> List[Crn]:
        return parse_crn_stanzas(Path(path).read_text(encoding="utf-8"))

    # -- records ------------------------------------------------------------

    @staticmethod
    def save_record(record: BaseModel, path: Path) -> Path:
        """Pretty JSON with sorted keys, so equal records give equal files."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.loads(record.model_dump_json())
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Saved %s to %s", type(record).__name__, path)
        return path

    @staticmethod
    def load_record(path: Path, model: Type[ModelT]) -> ModelT:
        return model.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def record_path(self, name: str) -> Path:
        return self.records_dir / f"{name}.json"

    # -- tables -------------------------------------------------------------

    @staticmethod
    def write_table(rows: Sequence[Dict], path: Path, columns: Optional[Sequence[str]] = None) -> None:
        """CSV with a leading schema_version column."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = list(columns) if columns else (list(rows[0].keys()) if rows else [])
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=["schema_version"] + columns)
            writer.writeheader()
            for row in rows:
                writer.writerow({"schema_version": SCHEMA_VERSION, **{c: row.get(c) for c in columns}})
        logger.info("Wrote %d table rows to %s", len(rows), path)

    def write_trajectory(self, times: np.ndarray, states: np.ndarray, name: str,
                         names: Optional[Sequence[str]] = None) -> Path:
        """t, x1..xn columns for external plotting."""
        path = self.trajectories_dir / f"{name}.csv"
        names = list(names) if names else [f"x{i + 1}" for i in range(states.shape[1])]
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["t"] + names)
            for t, x in zip(times, states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in x])
        return path
