# -*- coding: utf-8 -*-

"""Synthetic scenes with known ground truth.

WallSpec
  A rough, wavy retaining wall sampled on a regular grid.
FacadeSpec
  A flat facade with a grid of recessed windows, for registration.
DeformationField
  Smooth lateral displacement ``f(x, z)`` imposed on a wall.

All generators are deterministic for a given seed, and the seed only
affects the noise.

"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import exceptions_
from .cloudcore import PointCloud, RigidTransform, apply_transform
from .config import read_config_file
from .deform import DeformationMap

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['WallSpec', 'FacadeSpec', 'DeformationField', 'gen_wall',
           'gen_facade', 'deform_wall', 'inject_outliers']

log = logging.getLogger(__name__)

EXTENT_TOL = 1e-9


def _check_positive(spec, names):
    for name in names:
        if not getattr(spec, name) > 0:
            raise exceptions_.InvariantError(
                "{} must be positive, got {}".format(name, getattr(spec, name)))


def _grid(x0, length, z0, height, spacing):
    nx = int(round(length / spacing)) + 1
    nz = int(round(height / spacing)) + 1
    x = np.linspace(x0, x0 + length, nx)
    z = np.linspace(z0, z0 + height, nz)
    xx, zz = np.meshgrid(x, z)
    return xx.ravel(), zz.ravel()


@dataclass(frozen=True)
class WallSpec(object):
    """Wavy wall ``y = A sin(2 pi x / wavelength) sin(2 pi z / wavelength)``
    plus Gaussian noise, on ``[x0, x0 + length] x [z0, z0 + height]``.
    Lengths in metres."""
    length: float = 4.
    height: float = 2.
    spacing: float = 0.005
    amplitude: float = 0.030
    wavelength: float = 0.3
    noise: float = 0.0015
    seed: int = 0
    x0: float = 0.
    z0: float = 0.

    def __post_init__(self):
        _check_positive(self, ('length', 'height', 'spacing', 'wavelength'))
        if self.amplitude < 0 or self.noise < 0:
            raise exceptions_.InvariantError("Amplitude and noise must be >= 0")

    @property
    def extent(self):
        return (self.x0, self.x0 + self.length, self.z0, self.z0 + self.height)

    def surface(self, x, z):
        k = 2. * np.pi / self.wavelength
        return self.amplitude * np.sin(k * x) * np.sin(k * z)


def gen_wall(spec):
    """Sample ``spec`` on a regular grid that includes both ends."""
    x, z = _grid(spec.x0, spec.length, spec.z0, spec.height, spec.spacing)
    rng = np.random.default_rng(spec.seed)
    y = spec.surface(x, z) + rng.normal(0., spec.noise, x.size)
    log.debug("Generated wall with %d points", x.size)
    return PointCloud(np.column_stack([x, y, z]), frame=PointCloud.FRAME_WALL,
                      source='synthetic wall (seed {})'.format(spec.seed))


@dataclass(frozen=True)
class FacadeSpec(object):
    """Flat facade in the plane y = 0 with ``windows`` recessed cells
    (columns, rows). Window recesses have their back at ``y = -depth``
    and sampled side walls."""
    width: float = 2.
    height: float = 1.5
    spacing: float = 0.01
    windows: tuple = (3, 3)
    window_size: tuple = (0.3, 0.3)
    depth: float = 0.1
    noise: float = 0.
    seed: int = 0

    def __post_init__(self):
        _check_positive(self, ('width', 'height', 'spacing'))
        if self.depth < 0 or self.noise < 0:
            raise exceptions_.InvariantError("Recess depth and noise must be >= 0")
        cols, rows = self.windows
        ww, wh = self.window_size
        if cols < 0 or rows < 0 or ww * cols >= self.width or wh * rows >= self.height:
            raise exceptions_.InvariantError(
                "Windows {} of size {} do not fit the facade".format(
                    self.windows, self.window_size))

    def window_boxes(self):
        """(x_lo, x_hi, z_lo, z_hi) of each window."""
        cols, rows = self.windows
        ww, wh = self.window_size
        boxes = []
        for j in range(rows):
            for i in range(cols):
                cx = self.width * (i + 0.5) / cols
                cz = self.height * (j + 0.5) / rows
                boxes.append((cx - ww / 2, cx + ww / 2, cz - wh / 2, cz + wh / 2))
        return boxes


def gen_facade(spec):
    """Facade points: the wall face, the window backs and, for a
    non-zero depth, the four side walls of every recess.

    Noise is added along each surface's normal.

    """
    x, z = _grid(0., spec.width, 0., spec.height, spec.spacing)
    y = np.zeros_like(x)
    normal_axis = [np.full(x.size, 1)]
    parts = []
    if spec.depth > 0:
        for x_lo, x_hi, z_lo, z_hi in spec.window_boxes():
            inside = (x > x_lo) & (x < x_hi) & (z > z_lo) & (z < z_hi)
            y[inside] = -spec.depth
            n_d = int(np.ceil(spec.depth / spec.spacing))
            ys = -np.linspace(0., spec.depth, n_d + 1)[1:-1]
            zs = z_lo + spec.spacing * np.arange(1, int(np.ceil((z_hi - z_lo) / spec.spacing)))
            xs = x_lo + spec.spacing * np.arange(1, int(np.ceil((x_hi - x_lo) / spec.spacing)))
            for xw in (x_lo, x_hi):
                yy, zz = np.meshgrid(ys, zs)
                parts.append((np.full(yy.size, xw), yy.ravel(), zz.ravel(), 0))
            for zw in (z_lo, z_hi):
                xx, yy = np.meshgrid(xs, ys)
                parts.append((xx.ravel(), yy.ravel(), np.full(xx.size, zw), 2))
    pts = [np.column_stack([x, y, z])]
    for px, py, pz, axis in parts:
        pts.append(np.column_stack([px, py, pz]))
        normal_axis.append(np.full(px.size, axis))
    pts = np.vstack(pts)
    axes = np.concatenate(normal_axis)
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0., spec.noise, pts.shape[0])
    pts[np.arange(pts.shape[0]), axes] += noise
    log.debug("Generated facade with %d points (%d windows)", pts.shape[0],
              len(spec.window_boxes()) if spec.depth > 0 else 0)
    return PointCloud(pts, frame=PointCloud.FRAME_WALL,
                      source='synthetic facade (seed {})'.format(spec.seed))


class DeformationField(object):
    """Smooth lateral displacement ``f(x, z)`` in metres, a spline
    patch through control values.

    Parameters
    ----------
    xs, zs : array_like
      Increasing control coordinates; at least two each.
    values : array_like
      Control values with shape ``(len(xs), len(zs))``.
    max_magnitude : float, optional
      Declared bound on ``|f|``. Estimated from a dense evaluation when
      omitted.

    """
    DENSE_SAMPLES = 201

    def __init__(self, xs, zs, values, max_magnitude=None):
        self.xs = np.asarray(xs, dtype=float)
        self.zs = np.asarray(zs, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.xs.size < 2 or self.zs.size < 2:
            raise exceptions_.InvariantError("A field needs two controls per axis")
        if self.values.shape != (self.xs.size, self.zs.size):
            raise exceptions_.InvariantError(
                "Control values have shape {}, expected {}".format(
                    self.values.shape, (self.xs.size, self.zs.size)))
        kx = min(3, self.xs.size - 1)
        kz = min(3, self.zs.size - 1)
        self.spline = RectBivariateSpline(self.xs, self.zs, self.values, kx=kx, ky=kz)
        if max_magnitude is None:
            gx = np.linspace(self.xs[0], self.xs[-1], self.DENSE_SAMPLES)
            gz = np.linspace(self.zs[0], self.zs[-1], self.DENSE_SAMPLES)
            max_magnitude = float(np.abs(self.spline(gx, gz)).max())
        self.max_magnitude = max_magnitude

    def __repr__(self):
        return "<DeformationField {}x{} controls, |f| <= {:.4g} m>".format(
            self.xs.size, self.zs.size, self.max_magnitude)

    @property
    def extent(self):
        return (self.xs[0], self.xs[-1], self.zs[0], self.zs[-1])

    def __call__(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return self.spline.ev(x, z)

    def covers(self, x, z):
        x0, x1, z0, z1 = self.extent
        return bool(np.all((x >= x0 - EXTENT_TOL) & (x <= x1 + EXTENT_TOL)
                           & (z >= z0 - EXTENT_TOL) & (z <= z1 + EXTENT_TOL)))

    def negated(self):
        return DeformationField(self.xs, self.zs, -self.values, self.max_magnitude)

    @classmethod
    def constant(cls, value, extent):
        x0, x1, z0, z1 = extent
        return cls([x0, x1], [z0, z1], np.full((2, 2), float(value)), abs(value))

    @classmethod
    def ramp(cls, offset, gx, gz, extent):
        """``f = offset + gx * x + gz * z``."""
        x0, x1, z0, z1 = extent
        xs, zs = np.array([x0, x1]), np.array([z0, z1])
        values = offset + gx * xs[:, None] + gz * zs[None, :]
        return cls(xs, zs, values, float(np.abs(values).max()))

    @classmethod
    def from_function(cls, func, extent, controls=(9, 9)):
        x0, x1, z0, z1 = extent
        xs = np.linspace(x0, x1, controls[0])
        zs = np.linspace(z0, z1, controls[1])
        xx, zz = np.meshgrid(xs, zs, indexing='ij')
        return cls(xs, zs, func(xx, zz))

    @classmethod
    def bump(cls, depth, extent, controls=(9, 9)):
        """Field that is 0 on the border and reaches ``depth`` (usually
        negative) in the middle."""
        x0, x1, z0, z1 = extent
        f = lambda x, z: (depth * np.sin(np.pi * (x - x0) / (x1 - x0))
                          * np.sin(np.pi * (z - z0) / (z1 - z0)))
        return cls.from_function(f, extent, controls)

    @classmethod
    def from_profile(cls, profile, ground_level, x_range):
        """Field constant along x that follows an inclinometer depth
        profile, in wall-frame y."""
        z = ground_level - profile.depths
        order = np.argsort(z)
        xs = np.asarray(x_range, dtype=float)
        values = np.tile(profile.wall_y[order], (2, 1))
        return cls(xs, z[order], values)

    def to_map(self, cell_size, method='truth'):
        """The field sampled at the centres of a grid aligned to
        multiples of ``cell_size``."""
        x0, x1, z0, z1 = self.extent
        i0 = int(np.ceil(x0 / cell_size - EXTENT_TOL))
        i1 = int(np.floor(x1 / cell_size + EXTENT_TOL))
        j0 = int(np.ceil(z0 / cell_size - EXTENT_TOL))
        j1 = int(np.floor(z1 / cell_size + EXTENT_TOL))
        nx, nz = max(i1 - i0, 0), max(j1 - j0, 0)
        x = (i0 + np.arange(nx) + 0.5) * cell_size
        z = (j0 + np.arange(nz) + 0.5) * cell_size
        values = self.spline(x, z).T if nx and nz else np.zeros((nz, nx))
        valid = np.ones((nz, nx), dtype=bool)
        return DeformationMap(i0 * cell_size, j0 * cell_size, cell_size, values,
                              valid.astype(int), valid, method)


def deform_wall(cloud, field):
    """Shift each point's y by ``field(x, z)``."""
    if cloud.frame != PointCloud.FRAME_WALL:
        raise exceptions_.InvariantError(
            "deform_wall needs a wall-frame cloud, got frame {!r}".format(cloud.frame))
    pts = np.array(cloud.points)
    if not field.covers(pts[:, 0], pts[:, 2]):
        raise exceptions_.FieldExtentError(
            "Field extent {} does not cover {!r}".format(field.extent, cloud.source))
    pts[:, 1] += field(pts[:, 0], pts[:, 2])
    return cloud.with_points(pts)


def inject_outliers(cloud, fraction, magnitude=0.4, seed=0):
    """Push a random ``fraction`` of the points ``magnitude`` metres
    along +y.

    Returns
    -------
    cloud : PointCloud
    indices : np.ndarray
      The points that were moved.

    """
    rng = np.random.default_rng(seed)
    count = int(round(fraction * len(cloud)))
    idx = np.sort(rng.choice(len(cloud), size=count, replace=False))
    pts = np.array(cloud.points)
    pts[idx, 1] += magnitude
    return cloud.with_points(pts), idx


# Scene files
# -----------

SCENE_DEFAULTS = {
    'kind': 'wall', # wall or facade
    'length': 4.,
    'height': 2.,
    'spacing': 0.005,
    'amplitude': 0.030,
    'wavelength': 0.3,
    'noise': 0.0015,
    'seed': 0,
    'query_seed': None, # defaults to seed + 1
    # Imposed field: none, constant, ramp or bump
    'field': 'none',
    'field_value': 0.,
    'field_gx': 0.,
    'field_gz': 0.,
    'outlier_fraction': 0.,
    'outlier_magnitude': 0.4,
    # Facade only
    'windows': [3, 3],
    'window_size': [0.3, 0.3],
    'depth': 0.1,
    'rotation_deg': 0.,
    'rotation_axis': [0., 0., 1.],
    'translation': [0., 0., 0.],
}


@dataclass
class Scene(object):
    """A generated reference/query pair and its ground truth."""
    reference: PointCloud
    query: PointCloud
    field: object = None
    displacement: object = None
    outliers: object = None


def read_scene_file(path):
    """Scene settings from a ``key = value`` file, merged over
    :py:data:`SCENE_DEFAULTS`."""
    values = dict(SCENE_DEFAULTS)
    values.update(read_config_file(path, defaults=SCENE_DEFAULTS))
    return values


def _field_for(values, extent):
    kind = str(values['field']).lower()
    if kind == 'none':
        return DeformationField.constant(0., extent)
    if kind == 'constant':
        return DeformationField.constant(float(values['field_value']), extent)
    if kind == 'ramp':
        return DeformationField.ramp(float(values['field_value']),
                                     float(values['field_gx']),
                                     float(values['field_gz']), extent)
    if kind == 'bump':
        return DeformationField.bump(float(values['field_value']), extent)
    raise exceptions_.ConfigError("Unknown field type {!r}".format(kind))


def build_scene(values):
    """Generate the scene described by ``values`` (see
    :py:data:`SCENE_DEFAULTS`).

    A wall scene's query is a second noise realisation of the wall
    deformed by the imposed field. A facade scene's query is the
    facade moved by the given rotation and translation.

    """
    seed = int(values['seed'])
    qseed = seed + 1 if values.get('query_seed') is None else int(values['query_seed'])
    kind = str(values['kind']).lower()
    if kind == 'wall':
        spec = WallSpec(float(values['length']), float(values['height']),
                        float(values['spacing']), float(values['amplitude']),
                        float(values['wavelength']), float(values['noise']), seed)
        reference = gen_wall(spec)
        field = _field_for(values, spec.extent)
        query = deform_wall(gen_wall(replace(spec, seed=qseed)), field)
        scene = Scene(reference, query, field=field)
    elif kind == 'facade':
        spec = FacadeSpec(float(values['length']), float(values['height']),
                          float(values['spacing']), tuple(values['windows']),
                          tuple(values['window_size']), float(values['depth']),
                          float(values['noise']), seed)
        reference = gen_facade(spec)
        moved = gen_facade(replace(spec, seed=qseed))
        displacement = RigidTransform.from_axis_angle(
            values['rotation_axis'], np.radians(float(values['rotation_deg'])),
            values['translation'])
        query = apply_transform(moved, displacement)
        scene = Scene(reference, query, displacement=displacement)
    else:
        raise exceptions_.ConfigError("Unknown scene kind {!r}".format(kind))
    if float(values['outlier_fraction']) > 0:
        scene.query, scene.outliers = inject_outliers(
            scene.query, float(values['outlier_fraction']),
            float(values['outlier_magnitude']), qseed)
    return scene
