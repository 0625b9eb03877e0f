import os
from typing import Dict, List

import numpy as np
import pandas as pd

from core.background.far_field import FarField
from core.equivalent.design import EffectiveIndex, ImpedanceSchedule
from core.geometry.placement import ScattererSet
from core.utils.logger import get_logger

FLOAT_FORMAT = '%.17g'

FAR_FIELD_COLUMNS = ['theta_idx', 'xhat_idx', 're', 'im']
PLACEMENT_COLUMNS = ['m', 'z_x', 'z_y', 'z_z', 'lambda_re', 'lambda_im', 'C_re', 'C_im']
CHARGE_COLUMNS = ['theta_idx', 'm', 're', 'im']
INDEX_COLUMNS = ['x', 'y', 'z', 'n_re', 'n_im', 'passive']
SCHEDULE_COLUMNS = ['m', 'z_x', 'z_y', 'z_z', 'lambda_tilde_re', 'lambda_tilde_im',
                    'lambda_re', 'lambda_im']
REPORT_COLUMNS = ['a', 'holes', 'min_distance', 'discrepancy', 'status', 'reason']


def validate_export_frame(df: pd.DataFrame, required: List[str]) -> Dict:
    """Check required columns and finite numeric values before export"""
    issues = []

    for column in required:
        if column not in df.columns:
            issues.append(f"Missing required column: {column}")

    numeric = df.select_dtypes(include=[np.number])
    if len(numeric.columns):
        bad = ~np.isfinite(numeric.to_numpy(dtype=float))
        for column in numeric.columns[bad.any(axis=0)]:
            if column in ('discrepancy', 'min_distance') or column not in required:
                continue  # failed sweep rows carry NaN
            issues.append(f"Non-finite values in column: {column}")

    return {
        "valid": len(issues) == 0,
        "issues": issues,
        "rows": len(df),
    }


class CSVExporter:
    def __init__(self, base_output_path: str = "./runs/latest"):
        self.base_output_path = base_output_path
        self.logger = get_logger('system')

    def _path(self, filename: str) -> str:
        os.makedirs(self.base_output_path, exist_ok=True)
        return os.path.join(self.base_output_path, filename)

    def _write(self, df: pd.DataFrame, filename: str, required: List[str]) -> str:
        check = validate_export_frame(df, required)
        if not check["valid"]:
            raise ValueError(f"Refusing to export {filename}: {check['issues']}")

        file_path = self._path(filename)
        df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT)
        self.logger.info(f"💾 Exported {len(df)} rows to {file_path}")
        return file_path

    def export_far_field(self, far: FarField, label: str = None) -> str:
        """farfield_<label>.csv: theta_idx, xhat_idx, re, im"""
        return self._write(far.to_frame(), f"farfield_{label or far.label}.csv", FAR_FIELD_COLUMNS)

    def export_placement(self, holes: ScattererSet, label: str) -> str:
        """placement_<label>.csv: one row per hole"""
        lam = holes.impedances
        C = holes.C
        df = pd.DataFrame({
            'm': np.arange(len(holes)),
            'z_x': holes.centers[:, 0],
            'z_y': holes.centers[:, 1],
            'z_z': holes.centers[:, 2],
            'lambda_re': lam.real,
            'lambda_im': lam.imag,
            'C_re': C.real,
            'C_im': C.imag,
        })
        return self._write(df, f"placement_{label}.csv", PLACEMENT_COLUMNS)

    def export_charges(self, charges: np.ndarray, label: str) -> str:
        """charges_<label>.csv: theta_idx, m, re, im (sorted by theta, then m)"""
        charges = np.asarray(charges, dtype=complex)
        m_idx, theta_idx = np.meshgrid(np.arange(charges.shape[0]), np.arange(charges.shape[1]),
                                       indexing='ij')
        df = pd.DataFrame({
            'theta_idx': theta_idx.reshape(-1),
            'm': m_idx.reshape(-1),
            're': charges.real.reshape(-1),
            'im': charges.imag.reshape(-1),
        }).sort_values(['theta_idx', 'm'], kind='mergesort')
        return self._write(df, f"charges_{label}.csv", CHARGE_COLUMNS)

    def export_report_rows(self, df: pd.DataFrame, study: str) -> str:
        """<study>_rows.csv: sweep rows in report order"""
        return self._write(df, f"{study}_rows.csv", REPORT_COLUMNS)

    def export_index_grid(self, index: EffectiveIndex, label: str = "index") -> str:
        """<label>.csv: x, y, z, n_re, n_im, passive"""
        df = pd.DataFrame({
            'x': index.points[:, 0],
            'y': index.points[:, 1],
            'z': index.points[:, 2],
            'n_re': index.values.real,
            'n_im': index.values.imag,
            'passive': index.values.imag >= 0,
        })
        return self._write(df, f"{label}.csv", INDEX_COLUMNS)

    def export_schedule(self, schedule: ImpedanceSchedule, label: str = "schedule") -> str:
        """<label>.csv: per-hole lambda_tilde_{m,0} and lambda_m"""
        df = pd.DataFrame({
            'm': np.arange(len(schedule.centers)),
            'z_x': schedule.centers[:, 0],
            'z_y': schedule.centers[:, 1],
            'z_z': schedule.centers[:, 2],
            'lambda_tilde_re': schedule.lambda_tilde.real,
            'lambda_tilde_im': schedule.lambda_tilde.imag,
            'lambda_re': schedule.lambda_m.real,
            'lambda_im': schedule.lambda_m.imag,
        })
        return self._write(df, f"{label}.csv", SCHEDULE_COLUMNS)

    def get_export_summary(self, file_path: str) -> Dict:
        """Get summary information about exported file"""
        try:
            if not os.path.exists(file_path):
                return {"error": "File not found"}

            df = pd.read_csv(file_path)
            return {
                "file_path": file_path,
                "file_size_bytes": os.path.getsize(file_path),
                "row_count": len(df),
                "columns": list(df.columns),
            }

        except Exception as e:
            return {"error": str(e)}
