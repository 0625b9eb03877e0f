#!/usr/bin/env python3
"""
Config Loader - Flat dotted-key run configuration

Config files are JSON. Nested objects are flattened into dotted keys, so
these two documents are equivalent:

    {"regime": {"a": 0.1, "beta": 0.0}}
    {"regime.a": 0.1, "regime.beta": 0.0}

Every key must appear in CONFIG_SCHEMA; unknown keys are errors.

Usage:
    config = load_config("config/base.json")
    medium = config.medium()
    regime = config.regime()
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from core.domain.fields import FieldPreset, ScalarField
from core.domain.types import AsymptoticRegime, DomainShape, MediumSpec, Wavenumber
from core.geometry.placement import ReferenceBody
from core.utils.errors import ConfigError
from core.utils.logger import get_logger

logger = get_logger('system')


def _field_keys(name: str, preset: str, value) -> Dict[str, Tuple[str, Any]]:
    return {
        f'medium.{name}.preset': ('str', preset),
        f'medium.{name}.value': ('complex', value),
        f'medium.{name}.amplitude': ('complex', 0.0),
        f'medium.{name}.width': ('float', 1.0),
        f'medium.{name}.center': ('vec3', [0.5, 0.5, 0.5]),
        f'medium.{name}.path': ('str', None),
        f'medium.{name}.gamma': ('float', 1.0),
    }


# key -> (type, default)
CONFIG_SCHEMA: Dict[str, Tuple[str, Any]] = {
    'medium.shape': ('str', 'box'),
    'medium.box_lo': ('vec3', [0.0, 0.0, 0.0]),
    'medium.box_lengths': ('vec3', [1.0, 1.0, 1.0]),
    'medium.ball_center': ('vec3', [0.5, 0.5, 0.5]),
    'medium.ball_radius': ('float', 0.5),
    'medium.gamma': ('float', 1.0),
    **_field_keys('n', 'constant', 1.0),
    **_field_keys('K', 'constant', 0.0),
    **_field_keys('lambda0', 'constant', 1.0),

    'regime.a': ('float', 0.1),
    'regime.beta': ('float', 0.0),
    'regime.s': ('float', None),
    'regime.t': ('float', 2.0 / 3.0),
    'regime.m_max': ('float', 1.0),
    'regime.d_min': ('float', 0.5),
    'regime.d_max': ('float', 2.0),
    'regime.kappa_max': ('float', 10.0),
    'regime.lambda_minus': ('float', 0.0),
    'regime.lambda_plus': ('float', math.inf),

    'body.diameter': ('float', 1.0),
    'body.perimeters': ('floats', None),

    'wave.kappa': ('float', 1.0),

    'equivalent.cloak': ('bool', False),
    'equivalent.pi_factor': ('bool', False),

    'solver.grid_h': ('float', 0.1),
    'solver.subsamples': ('int', 3),
    'solver.threads': ('int', 1),
    'solver.block_size': ('int', 256),
    'solver.residual_tol': ('float', 1e-10),

    'sphere.order': ('int', 4),

    'run.name': ('str', 'default'),
    'run.seed': ('int', 0),
    'run.a_list': ('floats', [0.1, 0.07, 0.05, 0.035, 0.025]),
    'run.out_dir': ('str', 'runs/latest'),

    'sweep.beta_list': ('floats', [0.0, 0.1, 0.2]),
    'sweep.dilute_s': ('float', 1.5),
}


def flatten(document: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    """Flatten nested dictionaries into dotted keys"""
    flat = {}
    for key, value in document.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict) and not _is_complex_literal(value):
            flat.update(flatten(value, prefix=f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _is_complex_literal(value) -> bool:
    return isinstance(value, dict) and set(value) == {'re', 'im'}


def _coerce(key: str, kind: str, value):
    """Convert a raw JSON value to the schema type"""
    if value is None:
        return None
    try:
        if kind == 'str':
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == 'bool':
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == 'int':
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind == 'float':
            if isinstance(value, (bool, str)):
                raise TypeError
            return float(value)
        if kind == 'complex':
            if _is_complex_literal(value):
                return complex(float(value['re']), float(value['im']))
            if isinstance(value, (list, tuple)) and len(value) == 2:
                return complex(float(value[0]), float(value[1]))
            if isinstance(value, (bool, str)):
                raise TypeError
            return complex(value) if isinstance(value, complex) else float(value)
        if kind == 'vec3':
            if len(value) != 3:
                raise TypeError
            return [float(v) for v in value]
        if kind == 'floats':
            if isinstance(value, str):
                return [float(v) for v in value.split(',') if v.strip()]
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"Config key '{key}' expects {kind}, got {value!r}")
    raise ConfigError(f"Unknown schema type {kind} for '{key}'")


@dataclass(frozen=True)
class SolverSettings:
    """Discretization and parallelism settings"""
    grid_h: float = 0.1
    subsamples: int = 3
    threads: int = 1
    block_size: int = 256
    residual_tol: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    """Resolved, validated configuration"""
    values: Tuple[Tuple[str, Any], ...]
    source: Optional[str] = None

    def __getitem__(self, key: str):
        for k, v in self.values:
            if k == key:
                return v
        raise KeyError(key)

    def as_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.values}

    def override(self, **updates) -> 'RunConfig':
        """Copy with dotted-key overrides (keys use '__' for '.')"""
        data = self.as_dict()
        for key, value in updates.items():
            dotted = key.replace('__', '.')
            if dotted not in CONFIG_SCHEMA:
                raise ConfigError(f"Unknown config key: {dotted}")
            data[dotted] = _coerce(dotted, CONFIG_SCHEMA[dotted][0], value)
        return RunConfig(values=tuple(sorted(data.items())), source=self.source)

    # ===== TYPED ACCESSORS =====

    def _field(self, name: str) -> ScalarField:
        preset = self[f'medium.{name}.preset']
        if preset not in FieldPreset.list():
            raise ConfigError(f"medium.{name}.preset must be one of {FieldPreset.list()}: {preset}")
        value = self[f'medium.{name}.value']
        amplitude = self[f'medium.{name}.amplitude']
        center = self[f'medium.{name}.center']
        width = self[f'medium.{name}.width']
        try:
            if preset == 'constant':
                return ScalarField.constant(value)
            if preset == 'radial_ramp':
                return ScalarField.radial_ramp(value, amplitude, center, width)
            if preset == 'gaussian_bump':
                return ScalarField.gaussian_bump(value, amplitude, center, width)
            path = self[f'medium.{name}.path']
            if not path:
                raise ConfigError(f"medium.{name}.path is required for the grid preset")
            if not Path(path).exists():
                raise ConfigError(f"Field samples not found: {path}")
            return ScalarField.from_grid(path, gamma=self[f'medium.{name}.gamma'])
        except ValueError as e:
            raise ConfigError(f"medium.{name}: {e}")

    def medium(self) -> MediumSpec:
        shape = self['medium.shape']
        fields = dict(n=self._field('n'), K=self._field('K'), lambda0=self._field('lambda0'),
                      gamma=self['medium.gamma'])
        try:
            if shape == DomainShape.BALL.value:
                return MediumSpec.ball(center=self['medium.ball_center'],
                                       radius=self['medium.ball_radius'], **fields)
            if shape == DomainShape.BOX.value:
                return MediumSpec(box_lo=tuple(self['medium.box_lo']),
                                  box_lengths=tuple(self['medium.box_lengths']), **fields)
        except ValueError as e:
            raise ConfigError(f"medium: {e}")
        raise ConfigError(f"medium.shape must be 'box' or 'ball': {shape}")

    def regime(self, a: Optional[float] = None) -> AsymptoticRegime:
        return AsymptoticRegime(
            a=self['regime.a'] if a is None else a,
            beta=self['regime.beta'],
            s=self['regime.s'],
            t=self['regime.t'],
            m_max=self['regime.m_max'],
            d_min=self['regime.d_min'],
            d_max=self['regime.d_max'],
            kappa_max=self['regime.kappa_max'],
            lambda_minus=self['regime.lambda_minus'],
            lambda_plus=self['regime.lambda_plus'],
        )

    def wavenumber(self) -> Wavenumber:
        try:
            return Wavenumber(self['wave.kappa'])
        except ValueError as e:
            raise ConfigError(str(e))

    def body(self) -> ReferenceBody:
        perimeters = self['body.perimeters']
        try:
            return ReferenceBody(diameter=self['body.diameter'],
                                 perimeters=tuple(perimeters) if perimeters else None)
        except ValueError as e:
            raise ConfigError(f"body: {e}")

    def solver(self) -> SolverSettings:
        return SolverSettings(
            grid_h=self['solver.grid_h'],
            subsamples=self['solver.subsamples'],
            threads=max(1, self['solver.threads']),
            block_size=max(1, self['solver.block_size']),
            residual_tol=self['solver.residual_tol'],
        )

    @property
    def a_list(self) -> List[float]:
        return list(self['run.a_list'])


def config_from_dict(document: Dict[str, Any], source: Optional[str] = None) -> RunConfig:
    """
    Validate a (nested or flat) config document against the schema

    Args:
        document: Parsed JSON
        source: Origin for error messages

    Returns:
        RunConfig with defaults filled in
    """
    flat = flatten(document)
    unknown = sorted(set(flat) - set(CONFIG_SCHEMA))
    if unknown:
        raise ConfigError(f"Unknown config keys in {source or 'config'}: {unknown}")

    resolved = {}
    for key, (kind, default) in CONFIG_SCHEMA.items():
        raw = flat.get(key, default)
        resolved[key] = _coerce(key, kind, raw)

    return RunConfig(values=tuple(sorted(resolved.items())), source=source)


def load_config(path: Optional[str] = None) -> RunConfig:
    """
    Load a JSON config file (or defaults when path is None)

    Args:
        path: Config file path

    Returns:
        RunConfig
    """
    if path is None:
        return config_from_dict({})

    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {config_path}")

    try:
        with open(config_path, 'r') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {config_path} is not valid JSON: {e}")

    if not isinstance(document, dict):
        raise ConfigError(f"Config file {config_path} must hold a JSON object")

    config = config_from_dict(document, source=str(config_path))
    logger.info(f"⚙️  Loaded config: {config_path}")
    return config
