#!/usr/bin/env python3
"""
Far-Field Tables

F(xhat, theta) tabulated on SphereGrid x SphereGrid, with the normalization
U^s(x) = exp(i kappa |x|) / (4 pi |x|) F(xhat, theta) + O(|x|^-2).

values[i, j] is the amplitude in direction xhat_i for incidence theta_j.
"""

from dataclasses import dataclass, replace
from typing import Dict

import numpy as np
import pandas as pd

from core.domain.sampling import SphereGrid


@dataclass(frozen=True)
class FarField:
    """Complex far-field amplitudes on a direction grid"""
    values: np.ndarray   # (D, D) complex, [xhat, theta]
    sphere: SphereGrid
    kappa: float
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        d = len(self.sphere)
        if values.shape != (d, d):
            raise ValueError(f"Far field must have shape ({d}, {d}), got {values.shape}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, sphere: SphereGrid, kappa: float, label: str = "") -> 'FarField':
        d = len(sphere)
        return cls(values=np.zeros((d, d), dtype=complex), sphere=sphere, kappa=kappa, label=label)

    def _check_compatible(self, other: 'FarField'):
        if self.values.shape != other.values.shape:
            raise ValueError(f"Far-field grids differ: {self.values.shape} vs {other.values.shape}")

    def __add__(self, other: 'FarField') -> 'FarField':
        self._check_compatible(other)
        return replace(self, values=self.values + other.values)

    def __sub__(self, other: 'FarField') -> 'FarField':
        self._check_compatible(other)
        return replace(self, values=self.values - other.values)

    def relabel(self, label: str) -> 'FarField':
        return replace(self, label=label)

    # ===== NORMS =====

    def sup_norm(self) -> float:
        """max over (xhat, theta) of |F|"""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def sup_distance(self, other: 'FarField') -> float:
        return (self - other).sup_norm()

    def reciprocity_defect(self) -> float:
        """max |F(xhat, theta) - F(-theta, -xhat)|"""
        anti = self.sphere.antipode
        swapped = self.values[np.ix_(anti, anti)].T
        return float(np.max(np.abs(self.values - swapped)))

    def l2_norm(self) -> float:
        """Quadrature L2 norm over S^2 x S^2"""
        w = self.sphere.weights
        return float(np.sqrt(np.real(w @ (np.abs(self.values) ** 2) @ w)))

    def relative_l2_error(self, reference: 'FarField') -> float:
        """||F - reference|| / ||reference|| in the quadrature L2 norm"""
        self._check_compatible(reference)
        denom = reference.l2_norm()
        if denom == 0.0:
            return (self - reference).l2_norm()
        return (self - reference).l2_norm() / denom

    # ===== EXPORT =====

    def to_frame(self) -> pd.DataFrame:
        """Long table: theta_idx, xhat_idx, re, im"""
        d = len(self.sphere)
        xhat_idx, theta_idx = np.meshgrid(np.arange(d), np.arange(d), indexing='ij')
        return pd.DataFrame({
            'theta_idx': theta_idx.reshape(-1),
            'xhat_idx': xhat_idx.reshape(-1),
            're': self.values.real.reshape(-1),
            'im': self.values.imag.reshape(-1),
        }).sort_values(['theta_idx', 'xhat_idx'], kind='mergesort').reset_index(drop=True)

    def to_json_dict(self) -> Dict:
        return {
            'label': self.label,
            'kappa': self.kappa,
            'sphere_order': self.sphere.order,
            'directions': self.sphere.directions,
            'weights': self.sphere.weights,
            're': self.values.real,
            'im': self.values.imag,
            'sup_norm': self.sup_norm(),
        }
