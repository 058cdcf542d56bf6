# -*- coding: utf-8 -*-

"""Deformation estimators between a reference and a query scan of the
same wall, both expressed in the wall frame.

M3C2Params
  Settings for the M3C2 estimator.
PointwiseDeformation
  Signed deformation at a set of positions with validity and reasons.
DeformationMap
  Regular grid of deformation values over the wall x-z plane.

Four estimators are available: :py:func:`c2m` (cloud to mesh),
:py:func:`m2m` (mesh to mesh on a grid), :py:func:`m3c2` (distance
along local normals between cylinder means) and :py:func:`icp_deform`
(y-distance between ICP correspondences). Positive values point away
from the pit (+y), negative values toward it.

"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import exceptions_
from .cloudcore import fit_plane, data_spacing
from .meshing import delaunay_tin, mesh_distances, normal_distances
from .registration import IcpParams, estimate_normals, icp_point_to_plane, normals_at
from .spatial import SpatialIndex, subsample_min_distance
from .report import atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['M3C2Params', 'PointwiseDeformation', 'DeformationMap', 'c2m',
           'm2m', 'm3c2', 'icp_deform', 'filter_range', 'rasterize',
           'run_method', 'read_map_csv', 'METHODS']

log = logging.getLogger(__name__)

METHODS = ('c2m', 'm2m', 'm3c2', 'icp')
DEFAULT_CELL_SIZE = 0.020
DEFAULT_RANGE = (-0.015, 0.)
WALL_NORMAL = np.array([0., 1., 0.])
MAP_HEADER = 'x_m,z_m,deformation_mm,count,valid'
C2M_MODES = ('normal', 'closest')
M2M_SAMPLES = 2
# Smallest normal y component M3C2 converts to a wall-y displacement
MIN_WALL_Y = 0.2
# x and z: the axes spanning the wall face
FACE_AXES = [0, 2]


@dataclass(frozen=True)
class M3C2Params(object):
    """M3C2 settings, all in metres.

    Attributes
    ----------
    normal_diameter : float
      Diameter of the sphere used to fit the normal at a core point.
    projection_diameter : float
      Diameter of the projection cylinder.
    height : float
      Full length of the projection cylinder.
    resolution : float
      Minimum spacing between core points; 0 uses every reference
      point.
    wall_y : bool
      Report the y component of the displacement (distance along the
      normal divided by the normal's y component) instead of the
      distance along the normal.

    """
    normal_diameter: float = 0.03
    projection_diameter: float = 0.03
    height: float = 4.
    resolution: float = 0.
    wall_y: bool = False

    def __post_init__(self):
        for name in ('normal_diameter', 'projection_diameter', 'height'):
            if not getattr(self, name) > 0:
                raise exceptions_.InvariantError(
                    "M3C2 {} must be positive, got {}".format(name, getattr(self, name)))
        if not self.resolution >= 0:
            raise exceptions_.InvariantError(
                "M3C2 resolution must be >= 0, got {}".format(self.resolution))

    @classmethod
    def for_spacing(cls, spacing, height=4., resolution=0., wall_y=False):
        """Parameters scaled to a data spacing: both diameters are four
        times the spacing."""
        return cls(4. * spacing, 4. * spacing, height, resolution, wall_y)


class _ReasonsMixin(object):
    EMPTY_CYLINDER = 'empty-cylinder'
    OUT_OF_FOOTPRINT = 'out-of-footprint'
    NO_CORRESPONDENCE = 'no-correspondence'
    INVALID_NORMAL = 'invalid-normal'
    OUT_OF_RANGE = 'out-of-range'

    def reason_counts(self):
        reasons = self.reasons[~self.valid]
        names, counts = np.unique(reasons, return_counts=True)
        return {str(n): int(c) for n, c in zip(names, counts)}

    def valid_values(self):
        return self.values[self.valid]

    def _stats_mm(self):
        v = self.valid_values() * 1000.
        stats = {'valid_fraction': float(self.valid.mean()) if self.valid.size else 0.}
        if v.size:
            stats.update(mean_mm=float(v.mean()), min_mm=float(v.min()),
                         max_mm=float(v.max()))
        else:
            stats.update(mean_mm=float('nan'), min_mm=float('nan'),
                         max_mm=float('nan'))
        stats['invalid_reasons'] = self.reason_counts()
        return stats


def _reason_array(n):
    return np.full(n, '', dtype='<U20')


@dataclass(eq=False)
class PointwiseDeformation(_ReasonsMixin):
    """Signed deformation (metres) at a set of positions.

    Invalid entries keep a reason; their values are nan unless they
    were removed by range filtering, in which case the estimate is
    kept for inspection.

    """
    positions: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    reasons: np.ndarray
    method: str
    registration: Optional[object] = field(default=None, repr=False)

    def __len__(self):
        return self.values.shape[0]

    def summary(self):
        stats = self._stats_mm()
        stats.update(method=self.method, count=len(self),
                     valid_count=int(self.valid.sum()))
        return stats


@dataclass(eq=False)
class DeformationMap(_ReasonsMixin):
    """Grid of deformation values over the wall x-z plane.

    Cell ``(j, i)`` covers ``x0 + i * cell_size`` to
    ``x0 + (i + 1) * cell_size`` and likewise in z. Values are in
    metres; :py:meth:`values_mm` gives millimetres for export.

    """
    x0: float
    z0: float
    cell_size: float
    values: np.ndarray
    counts: np.ndarray
    valid: np.ndarray
    method: str
    reasons: np.ndarray = None

    def __post_init__(self):
        if not self.cell_size > 0:
            raise exceptions_.InvariantError(
                "Cell size must be positive, got {}".format(self.cell_size))
        if self.reasons is None:
            self.reasons = np.where(self.valid, '', 'empty-cell').astype('<U20')

    @property
    def shape(self):
        return self.values.shape

    def cell_centres(self):
        """Arrays ``(x, z)`` of cell centre coordinates, shaped like
        :py:attr:`values`."""
        nz, nx = self.shape
        x = self.x0 + (np.arange(nx) + 0.5) * self.cell_size
        z = self.z0 + (np.arange(nz) + 0.5) * self.cell_size
        return np.meshgrid(x, z)

    def values_mm(self):
        return np.where(self.valid, self.values * 1000., np.nan)

    def value_at(self, x, z):
        """Value of the cell holding ``(x, z)``; nan if the cell is
        invalid or off the grid."""
        i = int(np.floor((x - self.x0) / self.cell_size))
        j = int(np.floor((z - self.z0) / self.cell_size))
        nz, nx = self.shape
        if 0 <= i < nx and 0 <= j < nz and self.valid[j, i]:
            return float(self.values[j, i])
        return float('nan')

    def summary(self):
        stats = self._stats_mm()
        stats.update(method=self.method, cells=int(self.values.size),
                     valid_cells=int(self.valid.sum()),
                     cell_size_m=self.cell_size)
        return stats

    def to_csv(self, path):
        """Write ``x_m,z_m,deformation_mm,count,valid`` rows, z outer,
        x inner."""
        x, z = self.cell_centres()
        table = np.column_stack([x.ravel(), z.ravel(), self.values_mm().ravel(),
                                 self.counts.ravel(), self.valid.ravel()])
        with atomic_write(path) as fh:
            np.savetxt(fh, table, fmt=['%.6f', '%.6f', '%.3f', '%d', '%d'],
                       delimiter=',', header=MAP_HEADER, comments='')
        log.info("Wrote %s map %s (%d x %d cells)", self.method, path, *self.shape)


def read_map_csv(path, method='', cell_size=DEFAULT_CELL_SIZE):
    """Read a map written by :py:meth:`DeformationMap.to_csv`.

    ``cell_size`` is only used when the grid has a single cell.

    """
    try:
        data = np.genfromtxt(path, delimiter=',', names=True, ndmin=1)
    except ValueError as e:
        raise exceptions_.CloudFormatError(str(e), path=path)
    names = data.dtype.names or ()
    if tuple(names) != tuple(MAP_HEADER.split(',')):
        raise exceptions_.CloudFormatError(
            "expected header {!r}".format(MAP_HEADER), path=path, lineno=1)
    if data.size == 0:
        raise exceptions_.EmptyInputError("{}: map has no cells".format(path))
    xs = np.unique(data['x_m'])
    zs = np.unique(data['z_m'])
    steps = np.concatenate([np.diff(xs), np.diff(zs)])
    if steps.size:
        cell_size = float(np.round(steps.min(), 9))
    nx, nz = xs.size, zs.size
    if nx * nz != data.size:
        raise exceptions_.CloudFormatError(
            "rows do not form a complete grid", path=path)
    values = (data['deformation_mm'] / 1000.).reshape(nz, nx)
    valid = data['valid'].astype(bool).reshape(nz, nx) & np.isfinite(values)
    counts = data['count'].astype(int).reshape(nz, nx)
    x0 = float(xs[0] - cell_size / 2.)
    z0 = float(zs[0] - cell_size / 2.)
    return DeformationMap(x0, z0, cell_size, np.where(valid, values, np.nan),
                          counts, valid, method)


def _reference_plane(reference):
    return fit_plane(reference).oriented(WALL_NORMAL)


def c2m(query, reference, plane=None, mode='normal', progress=False):
    """Signed distance from each query point to a TIN of the reference.

    The reference is triangulated over its best-fit plane (normal
    toward +y) unless ``plane`` is given. With ``mode='normal'`` the
    distance is taken along the plane normal to the triangle the query
    point projects into; ``mode='closest'`` uses the closest point on
    the mesh. Query points outside the mesh footprint are invalid and
    carry their closest-point distance.

    """
    if mode not in C2M_MODES:
        raise exceptions_.ConfigError(
            "Unknown C2M mode {!r}; expected one of {}".format(mode, C2M_MODES))
    query.require_points('query cloud')
    if plane is None:
        plane = _reference_plane(reference)
    mesh = delaunay_tin(reference, plane)
    if mode == 'normal':
        d, inside = normal_distances(query.points, mesh)
        outside = np.flatnonzero(~inside)
        if outside.size:
            d[outside], _ = mesh_distances(query.points[outside], mesh,
                                           progress=progress)
    else:
        d, inside = mesh_distances(query.points, mesh, progress=progress)
    reasons = _reason_array(len(query))
    reasons[~inside] = PointwiseDeformation.OUT_OF_FOOTPRINT
    log.info("C2M (%s): %d of %d query points inside the reference footprint",
             mode, int(inside.sum()), len(query))
    return PointwiseDeformation(query.points.copy(), d, inside, reasons, 'C2M')


def _grid_range(lo, hi, cell):
    first = int(np.floor(lo / cell))
    last = int(np.floor(hi / cell))
    return first, last - first + 1


def m2m(reference, query, cell_size=DEFAULT_CELL_SIZE, plane=None,
        samples=M2M_SAMPLES):
    """Mesh-to-mesh deformation on a grid.

    Both clouds are triangulated over the reference best-fit plane.
    Each cell (aligned to multiples of ``cell_size``) is sampled on a
    regular ``samples`` x ``samples`` sub-grid; the deformation is the
    mean over the sub-samples inside both footprints of the query mesh
    height minus the reference mesh height along the plane normal.
    ``samples=1`` samples the cell centre only. A cell's count is the
    number of sub-samples used.

    """
    if not cell_size > 0:
        raise exceptions_.InvariantError(
            "Cell size must be positive, got {}".format(cell_size))
    if int(samples) < 1:
        raise exceptions_.InvariantError(
            "M2M needs at least one sample per cell, got {}".format(samples))
    s = int(samples)
    if plane is None:
        plane = _reference_plane(reference)
    ref_mesh = delaunay_tin(reference, plane)
    qry_mesh = delaunay_tin(query, plane)
    lo = ref_mesh.uv.min(axis=0)
    hi = ref_mesh.uv.max(axis=0)
    i0, nx = _grid_range(lo[0], hi[0], cell_size)
    j0, nz = _grid_range(lo[1], hi[1], cell_size)
    u = (i0 * s + np.arange(nx * s) + 0.5) * cell_size / s
    v = (j0 * s + np.arange(nz * s) + 0.5) * cell_size / s
    uu, vv = np.meshgrid(u, v)
    nodes = np.column_stack([uu.ravel(), vv.ravel()])
    h_ref, in_ref = ref_mesh.heights_at(nodes)
    h_qry, in_qry = qry_mesh.heights_at(nodes)
    both = in_ref & in_qry
    diff = np.where(both, h_qry - h_ref, 0.).reshape(nz, s, nx, s)
    counts = both.reshape(nz, s, nx, s).sum(axis=(1, 3))
    valid = counts > 0
    values = np.full((nz, nx), np.nan)
    values[valid] = diff.sum(axis=(1, 3))[valid] / counts[valid]
    reasons = np.where(valid, '', PointwiseDeformation.OUT_OF_FOOTPRINT).astype('<U20')
    log.info("M2M: %d of %d cells valid (%d x %d samples per cell)",
             int(valid.sum()), valid.size, s, s)
    return DeformationMap(i0 * cell_size, j0 * cell_size, cell_size,
                          values, counts, valid, 'M2M', reasons)


def m3c2(reference, query, params=None, progress=False):
    """M3C2 distances at core points drawn from the reference.

    At each core point the normal is fitted to reference points within
    half the normal diameter and turned toward +y. A cylinder of
    radius half the projection diameter and length ``height`` is laid
    along the normal through the core point; the deformation is the
    mean axial position of the query points inside it minus that of
    the reference points. With ``params.wall_y`` the distance is
    divided by the normal's y component, and core points whose normal
    is within ``acos(MIN_WALL_Y)`` of the wall plane get an invalid
    normal.

    """
    params = params or M3C2Params()
    reference.require_points('reference cloud')
    query.require_points('query cloud')
    log.info("M3C2 with D_n=%.4f m, D_d=%.4f m, h=%.3f m, resolution=%.4f m%s",
             params.normal_diameter, params.projection_diameter, params.height,
             params.resolution, ', wall y' if params.wall_y else '')
    ref_index = SpatialIndex(reference)
    qry_index = SpatialIndex(query)
    core_ids = subsample_min_distance(reference, params.resolution, ref_index)
    cores = reference.points[core_ids]
    normals, nvalid = normals_at(ref_index, cores, params.normal_diameter / 2.,
                                 progress=progress)
    flip = nvalid & (normals @ WALL_NORMAL < 0)
    normals[flip] *= -1
    if params.wall_y:
        nvalid &= ~(normals @ WALL_NORMAL < MIN_WALL_Y)
    m = cores.shape[0]
    values = np.full(m, np.nan)
    reasons = _reason_array(m)
    reasons[~nvalid] = PointwiseDeformation.INVALID_NORMAL
    radius = params.projection_diameter / 2.
    half = params.height / 2.
    ok = np.flatnonzero(nvalid)
    n_ref, mean_ref = ref_index.cylinder_axial_stats(
        cores[ok], normals[ok], radius, half, progress=progress)
    n_qry, mean_qry = qry_index.cylinder_axial_stats(
        cores[ok], normals[ok], radius, half, progress=progress)
    filled = (n_ref > 0) & (n_qry > 0)
    distance = mean_qry[filled] - mean_ref[filled]
    if params.wall_y:
        distance = distance / (normals[ok[filled]] @ WALL_NORMAL)
    values[ok[filled]] = distance
    reasons[ok[~filled]] = PointwiseDeformation.EMPTY_CYLINDER
    valid = reasons == ''
    log.info("M3C2: %d of %d core points valid", int(valid.sum()), m)
    return PointwiseDeformation(cores.copy(), values, valid, reasons, 'M3C2')


def icp_deform(reference, query, params=None, progress=False):
    """Deformation from ICP correspondences.

    The query is aligned onto the reference with point-to-plane ICP
    only to pair the two scans. Each aligned query point is paired
    with the reference point nearest to it across the wall face (in x
    and z); the y separation is what is being measured, so it takes no
    part in the pairing. The reported value is the y difference of the
    unaligned pair, so rigid motion of the wall is not cancelled.
    Pairs further apart across the face than ``rejection_factor``
    reference data spacings have no correspondence.

    """
    params = params or IcpParams()
    spacing = data_spacing(reference)
    radius = params.normal_radius or 2. * spacing
    index = SpatialIndex(reference)
    normals = estimate_normals(reference, radius, index=index, progress=progress)
    result = icp_point_to_plane(query, reference, normals, params, index=index)
    aligned = result.transform.apply(query.points)
    face = cKDTree(reference.points[:, FACE_AXES])
    dist, nn = face.query(aligned[:, FACE_AXES])
    valid = dist <= params.rejection_factor * spacing
    values = query.points[:, 1] - reference.points[nn, 1]
    reasons = _reason_array(len(query))
    reasons[~valid] = PointwiseDeformation.NO_CORRESPONDENCE
    log.info("ICP deformation: %d of %d correspondences kept",
             int(valid.sum()), len(query))
    return PointwiseDeformation(query.points.copy(), values, valid, reasons,
                                'ICP', registration=result)


def filter_range(d, lo=DEFAULT_RANGE[0], hi=DEFAULT_RANGE[1]):
    """Invalidate entries outside ``[lo, hi]`` metres.

    Works on :py:class:`PointwiseDeformation` and
    :py:class:`DeformationMap`; values themselves are never changed.

    """
    if lo > hi:
        raise exceptions_.InvariantError(
            "Filter range is empty: lo {} > hi {}".format(lo, hi))
    with np.errstate(invalid='ignore'):
        outside = d.valid & ((d.values < lo) | (d.values > hi))
    reasons = d.reasons.copy()
    reasons[outside] = d.OUT_OF_RANGE
    log.info("Range filter [%g, %g] m removed %d of %d valid %s values",
             lo, hi, int(outside.sum()), int(d.valid.sum()), d.method)
    return replace(d, valid=d.valid & ~outside, reasons=reasons)


def rasterize(d, cell_size=DEFAULT_CELL_SIZE):
    """Average valid pointwise deformations into wall x-z cells.

    The grid is aligned to multiples of ``cell_size`` and spans every
    position of ``d``; cells without valid points are invalid.

    """
    if not cell_size > 0:
        raise exceptions_.InvariantError(
            "Cell size must be positive, got {}".format(cell_size))
    if len(d) == 0:
        empty = np.zeros((0, 0))
        return DeformationMap(0., 0., cell_size, empty, empty.astype(int),
                              empty.astype(bool), d.method)
    x = d.positions[:, 0]
    z = d.positions[:, 2]
    i0, nx = _grid_range(x.min(), x.max(), cell_size)
    j0, nz = _grid_range(z.min(), z.max(), cell_size)
    x0, z0 = i0 * cell_size, j0 * cell_size
    i = np.clip(np.floor((x - x0) / cell_size).astype(int), 0, nx - 1)
    j = np.clip(np.floor((z - z0) / cell_size).astype(int), 0, nz - 1)
    cell = (j * nx + i)[d.valid]
    counts = np.bincount(cell, minlength=nx * nz)
    sums = np.bincount(cell, weights=d.values[d.valid], minlength=nx * nz)
    valid = counts > 0
    values = np.full(nx * nz, np.nan)
    values[valid] = sums[valid] / counts[valid]
    return DeformationMap(x0, z0, cell_size, values.reshape(nz, nx),
                          counts.reshape(nz, nx), valid.reshape(nz, nx), d.method)


def run_method(name, reference, query, cell_size=DEFAULT_CELL_SIZE,
               m3c2_params=None, icp_params=None, progress=False):
    """Run the estimator called ``name`` (one of :py:data:`METHODS`).

    Returns a :py:class:`DeformationMap` for ``'m2m'`` and a
    :py:class:`PointwiseDeformation` otherwise.

    """
    name = name.lower()
    if name == 'c2m':
        return c2m(query, reference, progress=progress)
    elif name == 'm2m':
        return m2m(reference, query, cell_size)
    elif name == 'm3c2':
        return m3c2(reference, query, m3c2_params, progress=progress)
    elif name == 'icp':
        return icp_deform(reference, query, icp_params, progress=progress)
    msg = "Unknown method {!r}; expected one of {}".format(name, METHODS)
    raise exceptions_.ConfigError(msg)
