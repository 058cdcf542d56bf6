# -*- coding: utf-8 -*-

"""Run configuration.

Defaults live in :py:data:`variableDict`. A configuration file of
``key = value`` lines overrides them, and command-line flags override
the file. Values are parsed as JSON where possible (numbers, lists,
booleans, null) and kept as plain strings otherwise.

RunConfig
  Validated configuration with typed parameter objects.

"""

import os
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, List, Tuple

import numpy as np

from . import exceptions_
from .cloudcore import WallFrame
from .deform import M3C2Params, METHODS
from .registration import IcpParams

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['variableDict', 'update_variable_dict', 'read_config_file',
           'RunConfig']

log = logging.getLogger(__name__)

variableDict = {
    # Inputs
    'reference': None,
    'query': None,
    'transform': None,
    'targets': None,
    'scene': None,
    'trace': None,
    'profile': None,
    'map': None,
    # Wall frame: identity, fit or explicit
    'frame': 'identity',
    'frame_origin': None,
    'frame_axes': None, # nine numbers, rows x, y, z
    'sensor': None,
    # Registration
    'mode': 'icp', # icp or targets
    'icp_max_iterations': 50,
    'icp_translation_tol': 1e-6, # m
    'icp_rotation_tol': 1e-7, # rad
    'icp_rejection_factor': 3.,
    'icp_normal_radius': None, # m, default 2 x data spacing
    'emphasis_box': None, # [xmin, ymin, zmin, xmax, ymax, zmax]
    'emphasis_weight': 1.,
    # Deformation
    'method': 'all',
    'cell_size_mm': 20.,
    'filter_lo_mm': -15.,
    'filter_hi_mm': 0.,
    'm3c2_normal_diameter': 0.03, # m
    'm3c2_projection_diameter': 0.03, # m
    'm3c2_height': 4., # m
    'm3c2_resolution': 0., # m
    'm3c2_wall_y': False,
    # Uncertainty sweep
    'levels': 6,
    'seed': 0,
    # Reference instruments
    'delta_beta': None, # arcseconds
    'length': None, # m
    'x': None, # m
    'ground_level': 0., # m
    # Output
    'out_dir': '.',
    'archive': None,
    'progress': True,
}

PATH_KEYS = ('reference', 'query', 'transform', 'targets', 'scene', 'trace',
             'profile', 'map')


def _normalise_key(key):
    return key.strip().lower().replace('-', '_')


def _parse_value(text):
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        if len(text) >= 2 and text[0] == text[-1] and text[0] in '\'"':
            return text[1:-1]
        return text


def read_key_value_file(path):
    """Read ``key = value`` lines, skipping blanks and ``#`` comments."""
    values = {}
    try:
        fh = open(path, 'r')
    except OSError as e:
        raise exceptions_.ConfigError("Cannot read {}: {}".format(path, e.strerror))
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                msg = "{}, line {}: expected 'key = value', got {!r}".format(
                    path, lineno, line)
                raise exceptions_.ConfigError(msg)
            key, value = line.split('=', 1)
            values[_normalise_key(key)] = _parse_value(value)
    return values


def read_config_file(path, defaults=None):
    """Read a configuration file and check its keys against
    ``defaults`` (:py:data:`variableDict` if omitted)."""
    defaults = variableDict if defaults is None else defaults
    values = read_key_value_file(path)
    unknown = sorted(set(values) - set(defaults))
    if unknown:
        raise exceptions_.ConfigError(
            "{}: unknown keys {}".format(path, ', '.join(unknown)))
    return values


def update_variable_dict(variable_dict, overrides):
    """Merge ``overrides`` into ``variable_dict``, ignoring None
    values."""
    log.debug('Orig variable dict: %s', variable_dict)
    for k, v in overrides.items():
        if v is not None:
            variable_dict[_normalise_key(k)] = v
    log.debug('New variable dict: %s', variable_dict)
    return variable_dict


def _vector(value, size, name):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size != size:
        raise exceptions_.ConfigError(
            "{} needs {} numbers, got {}".format(name, size, arr.size))
    return arr


@dataclass
class RunConfig(object):
    """Resolved settings for one command.

    Lengths are metres; the millimetre keys of the configuration are
    converted on the way in.

    """
    paths: dict = field(default_factory=dict)
    frame: str = 'identity'
    frame_origin: Optional[np.ndarray] = None
    frame_axes: Optional[np.ndarray] = None
    sensor: Optional[np.ndarray] = None
    mode: str = 'icp'
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    cell_size: float = 0.020
    filter_range: Tuple[float, float] = (-0.015, 0.)
    m3c2: M3C2Params = field(default_factory=M3C2Params)
    icp: IcpParams = field(default_factory=IcpParams)
    levels: int = 6
    seed: int = 0
    delta_beta: Optional[float] = None
    length: Optional[float] = None
    x: Optional[float] = None
    ground_level: float = 0.
    out_dir: str = '.'
    archive: Optional[str] = None
    progress: bool = True
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, values):
        """Build and validate a configuration from a merged
        dictionary."""
        values = {_normalise_key(k): v for k, v in values.items()}
        unknown = sorted(set(values) - set(variableDict))
        if unknown:
            raise exceptions_.ConfigError("Unknown settings: {}".format(', '.join(unknown)))
        merged = dict(variableDict)
        merged.update({k: v for k, v in values.items() if v is not None})
        paths = {}
        for key in PATH_KEYS:
            path = merged.get(key)
            if path is None:
                continue
            if not os.path.exists(str(path)):
                raise exceptions_.ConfigError(
                    "Input file for {} does not exist: {}".format(key, path))
            paths[key] = str(path)
        method = str(merged['method']).lower()
        if method == 'all':
            methods = list(METHODS)
        else:
            methods = [m.strip() for m in method.split(',') if m.strip()]
            bad = [m for m in methods if m not in METHODS]
            if bad or not methods:
                raise exceptions_.ConfigError(
                    "Unknown method {!r}; choose from {} or all".format(method, METHODS))
        if merged['frame'] not in ('identity', 'fit', 'explicit'):
            raise exceptions_.ConfigError(
                "Frame must be identity, fit or explicit, got {!r}".format(merged['frame']))
        if merged['mode'] not in ('icp', 'targets'):
            raise exceptions_.ConfigError(
                "Registration mode must be icp or targets, got {!r}".format(merged['mode']))
        box = _vector(merged['emphasis_box'], 6, 'emphasis_box')
        try:
            icp = IcpParams(
                max_iterations=int(merged['icp_max_iterations']),
                translation_tol=float(merged['icp_translation_tol']),
                rotation_tol=float(merged['icp_rotation_tol']),
                rejection_factor=float(merged['icp_rejection_factor']),
                emphasis_box=None if box is None else (tuple(box[:3]), tuple(box[3:])),
                emphasis_weight=float(merged['emphasis_weight']),
                normal_radius=(None if merged['icp_normal_radius'] is None
                               else float(merged['icp_normal_radius'])))
            m3c2 = M3C2Params(float(merged['m3c2_normal_diameter']),
                              float(merged['m3c2_projection_diameter']),
                              float(merged['m3c2_height']),
                              float(merged['m3c2_resolution']),
                              bool(merged['m3c2_wall_y']))
            cell_size = float(merged['cell_size_mm']) / 1000.
            lo = float(merged['filter_lo_mm']) / 1000.
            hi = float(merged['filter_hi_mm']) / 1000.
        except (TypeError, ValueError) as e:
            raise exceptions_.ConfigError("Bad parameter value: {}".format(e))
        if not cell_size > 0:
            raise exceptions_.ConfigError("cell_size_mm must be positive")
        if lo > hi:
            raise exceptions_.ConfigError(
                "filter_lo_mm {} is above filter_hi_mm {}".format(
                    merged['filter_lo_mm'], merged['filter_hi_mm']))
        axes = _vector(merged['frame_axes'], 9, 'frame_axes')
        return cls(
            paths=paths,
            frame=merged['frame'],
            frame_origin=_vector(merged['frame_origin'], 3, 'frame_origin'),
            frame_axes=None if axes is None else axes.reshape(3, 3),
            sensor=_vector(merged['sensor'], 3, 'sensor'),
            mode=merged['mode'],
            methods=methods,
            cell_size=cell_size,
            filter_range=(lo, hi),
            m3c2=m3c2,
            icp=icp,
            levels=int(merged['levels']),
            seed=int(merged['seed']),
            delta_beta=None if merged['delta_beta'] is None else float(merged['delta_beta']),
            length=None if merged['length'] is None else float(merged['length']),
            x=None if merged['x'] is None else float(merged['x']),
            ground_level=float(merged['ground_level']),
            out_dir=str(merged['out_dir']),
            archive=merged['archive'],
            progress=bool(merged['progress']),
            raw=merged,
        )

    def require(self, *keys):
        """Raise ConfigError unless every input in ``keys`` was given."""
        missing = [k for k in keys if k not in self.paths and getattr(self, k, None) is None]
        if missing:
            raise exceptions_.ConfigError(
                "Missing required input: {}".format(', '.join(missing)))

    def wall_frame(self, reference=None):
        """The configured :py:class:`WallFrame`, or None for clouds
        already in the wall frame."""
        if self.frame == 'identity':
            return None
        if self.frame == 'fit':
            if reference is None:
                raise exceptions_.ConfigError("Frame 'fit' needs a reference cloud")
            return WallFrame.fit(reference, self.sensor)
        if self.frame_origin is None or self.frame_axes is None:
            raise exceptions_.ConfigError("Explicit frame needs frame_origin and frame_axes")
        return WallFrame(self.frame_origin, self.frame_axes)

    def echo(self):
        """Plain dictionary of the settings for run reports."""
        return {k: v for k, v in sorted(self.raw.items())}
