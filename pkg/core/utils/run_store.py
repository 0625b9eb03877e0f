"""
Run Store - JSON artifacts of one run directory

Artifacts:
- manifest.json       resolved config, seed, tolerances, sign convention, versions
- report.json         study report (or <name>.json for named reports)
- invertibility.json  Foldy-Lax invertibility diagnostics
- farfield_<label>.json

Every write goes to a temp file in the same directory and is renamed over
the target, so a killed sweep leaves either the old or the new file.
"""

import json
import os
import shutil
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from core.utils.logger import get_logger

logger = get_logger('system')


def _json_default(value):
    """numpy scalars/arrays, complex as [re, im], anything else as str"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return str(value)


class RunStore:
    """
    JSON artifacts of one run directory

    Usage:
        store = RunStore("runs/base")
        store.save_manifest(manifest.to_dict())
        report = store.load_report()
    """

    def __init__(self, out_dir: str = "runs/latest"):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self.manifest_file = self.out_dir / "manifest.json"
        self.report_file = self.out_dir / "report.json"
        self.invertibility_file = self.out_dir / "invertibility.json"

    def _atomic_write(self, filepath: Path, data: Dict) -> bool:
        """
        Write JSON through a temp file and an atomic rename

        Returns:
            False (after logging) when serialization or I/O fails
        """
        fd, temp_path = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.",
                                         suffix=".tmp")
        try:
            with os.fdopen(fd, 'w') as f:
                json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
                f.flush()
                os.fsync(f.fileno())
            os.replace(temp_path, filepath)
            return True
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"❌ Failed to write {filepath}: {e}")
            if os.path.exists(temp_path):
                os.remove(temp_path)
            return False

    def _safe_load(self, filepath: Path) -> Optional[Dict]:
        """
        Load JSON, or None when missing or corrupt

        A corrupt file is copied to <stem>.corrupt.<timestamp> first.
        """
        if not filepath.exists():
            logger.debug(f"No artifact at {filepath}")
            return None

        try:
            with open(filepath, 'r') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
            backup_path = filepath.parent / f"{filepath.stem}.corrupt.{stamp}"
            shutil.copy(filepath, backup_path)
            logger.error(f"❌ Corrupt artifact {filepath} ({e}); kept a copy at {backup_path}")
            return None

    # ===== ARTIFACTS =====

    def save_manifest(self, manifest: Dict[str, Any]) -> bool:
        """Write manifest.json (RunManifest.to_dict())"""
        ok = self._atomic_write(self.manifest_file, manifest)
        if ok:
            logger.info(f"📝 Manifest written: {self.manifest_file}")
        return ok

    def load_manifest(self) -> Optional[Dict[str, Any]]:
        return self._safe_load(self.manifest_file)

    def save_report(self, report: Dict[str, Any], name: str = "report") -> bool:
        """
        Write a study report

        Args:
            report: Report dictionary
            name: File stem, 'report' by default

        Returns:
            True when written
        """
        filepath = self.out_dir / f"{name}.json"
        ok = self._atomic_write(filepath, report)
        if ok:
            logger.info(f"📊 Report written: {filepath}")
        return ok

    def load_report(self, name: str = "report") -> Optional[Dict[str, Any]]:
        return self._safe_load(self.out_dir / f"{name}.json")

    def save_invertibility(self, report: Dict[str, Any]) -> bool:
        return self._atomic_write(self.invertibility_file, report)

    def save_far_field(self, far_field: Dict[str, Any], label: str) -> bool:
        return self._atomic_write(self.out_dir / f"farfield_{label}.json", far_field)

    def get_artifact_info(self) -> Dict[str, Any]:
        """Size and modification time of every .json and .csv artifact"""
        info = {}
        for filepath in sorted(self.out_dir.glob("*.json")) + sorted(self.out_dir.glob("*.csv")):
            stat = filepath.stat()
            info[filepath.name] = {
                'size_bytes': stat.st_size,
                'modified': datetime.fromtimestamp(stat.st_mtime).isoformat(),
            }
        return info
