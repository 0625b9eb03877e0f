#!/usr/bin/env python3
"""
Scalar Fields - Named analytic presets for n(x), K(x) and lambda0(x)

Presets:
- constant:      value
- radial_ramp:   value + amplitude * |x - c| / width
- gaussian_bump: value + amplitude * exp(-|x - c|^2 / (2 width^2))
- grid:          samples from a .npz file (keys x, y, z, values)

Every field is a callable over an (N, 3) array of points returning (N,)
samples, and declares the Hoelder exponent gamma of its preset.

Usage:
    n = ScalarField.constant(2.0)
    K = ScalarField.gaussian_bump(0.0, 1.5, center=(0.5, 0.5, 0.5), width=0.2)
    values = n(points)
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator


class FieldPreset(Enum):
    """Supported scalar field presets"""
    CONSTANT = "constant"
    RADIAL_RAMP = "radial_ramp"
    GAUSSIAN_BUMP = "gaussian_bump"
    GRID = "grid"
    DERIVED = "derived"

    @classmethod
    def list(cls):
        """Return a list of all configurable preset names"""
        return [p.value for p in cls if p is not cls.DERIVED]


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, 3)
    if pts.shape[-1] != 3:
        raise ValueError(f"Points must have shape (N, 3), got {pts.shape}")
    return pts


@dataclass(frozen=True)
class ScalarField:
    """
    Scalar field over R^3 given by a named preset

    Complex values are allowed (refractive index, impedance profile).
    """
    preset: FieldPreset
    value: complex = 0.0
    amplitude: complex = 0.0
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    width: float = 1.0
    gamma: float = 1.0
    path: Optional[str] = None
    _fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    # ===== CONSTRUCTORS =====

    @classmethod
    def constant(cls, value: complex) -> 'ScalarField':
        return cls(FieldPreset.CONSTANT, value=value)

    @classmethod
    def radial_ramp(cls, value: complex, amplitude: complex,
                    center=(0.0, 0.0, 0.0), width: float = 1.0) -> 'ScalarField':
        if width <= 0:
            raise ValueError(f"Ramp width must be positive: {width}")
        return cls(FieldPreset.RADIAL_RAMP, value=value, amplitude=amplitude,
                   center=tuple(float(c) for c in center), width=float(width))

    @classmethod
    def gaussian_bump(cls, value: complex, amplitude: complex,
                      center=(0.0, 0.0, 0.0), width: float = 1.0) -> 'ScalarField':
        if width <= 0:
            raise ValueError(f"Bump width must be positive: {width}")
        return cls(FieldPreset.GAUSSIAN_BUMP, value=value, amplitude=amplitude,
                   center=tuple(float(c) for c in center), width=float(width))

    @classmethod
    def from_grid(cls, path: str, gamma: float = 1.0) -> 'ScalarField':
        """
        Load a sampled field from a .npz archive

        Args:
            path: File with 1-D axes 'x', 'y', 'z' and 3-D 'values'
            gamma: Declared Hoelder exponent of the samples
        """
        data = np.load(Path(path))
        axes = (data['x'], data['y'], data['z'])
        values = np.asarray(data['values'])
        interpolator = RegularGridInterpolator(axes, values, bounds_error=False,
                                               fill_value=None)
        return cls(FieldPreset.GRID, gamma=float(gamma), path=str(path),
                   _fn=lambda pts: interpolator(pts))

    @classmethod
    def derived(cls, fn: Callable[[np.ndarray], np.ndarray],
                gamma: float = 1.0) -> 'ScalarField':
        """Wrap an arbitrary function of the points"""
        return cls(FieldPreset.DERIVED, gamma=float(gamma), _fn=fn)

    # ===== EVALUATION =====

    def __call__(self, points) -> np.ndarray:
        pts = _as_points(points)

        if self.preset is FieldPreset.CONSTANT:
            return np.full(len(pts), self.value,
                           dtype=complex if np.iscomplexobj(self.value) else float)

        if self.preset in (FieldPreset.RADIAL_RAMP, FieldPreset.GAUSSIAN_BUMP):
            r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
            if self.preset is FieldPreset.RADIAL_RAMP:
                shape = r / self.width
            else:
                shape = np.exp(-r ** 2 / (2.0 * self.width ** 2))
            return self.value + self.amplitude * shape

        return np.asarray(self._fn(pts))

    @property
    def is_constant(self) -> bool:
        return self.preset is FieldPreset.CONSTANT

    def is_identically(self, value: complex) -> bool:
        """True when the preset is a constant equal to value"""
        return self.is_constant and complex(self.value) == complex(value)

    def describe(self) -> dict:
        """Manifest-friendly description"""
        info = {'preset': self.preset.value, 'gamma': self.gamma}
        if self.preset is FieldPreset.GRID:
            info['path'] = self.path
        elif self.preset is not FieldPreset.DERIVED:
            info['value'] = self.value
            if self.preset is not FieldPreset.CONSTANT:
                info.update(amplitude=self.amplitude, center=list(self.center), width=self.width)
        return info

    # ===== ARITHMETIC =====

    def scaled(self, factor: complex) -> 'ScalarField':
        """Return factor * self (constants stay constants)"""
        if self.is_constant:
            return ScalarField.constant(self.value * factor)
        return ScalarField.derived(lambda pts: factor * self(pts), gamma=self.gamma)
