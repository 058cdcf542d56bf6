# -*- coding: utf-8 -*-

"""Spatial queries and subsampling.

SpatialIndex
  Immutable k-d tree over a point cloud answering nearest-neighbour,
  sphere and cylinder queries.
VoxelPartition
  Assignment of every point of a cloud to a cubic voxel.

The subsampling helpers (:py:func:`split_half`,
:py:func:`random_in_voxel` and :py:func:`subsample_min_distance`) never
create coordinates; they only pick existing points.

"""

import logging
import itertools

import numpy as np
from scipy.spatial import cKDTree
import tqdm

from . import exceptions_

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['SpatialIndex', 'VoxelPartition', 'build_index', 'radius_search',
           'cylinder_search', 'morton_codes', 'split_half', 'voxel_partition',
           'random_in_voxel', 'subsample_min_distance']

log = logging.getLogger(__name__)

MORTON_BITS = 21
# Slack added to candidate radii so that boundary points survive rounding
CANDIDATE_SLACK = 1e-9


def _check_unit(direction):
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.shape != (3,) or abs(np.linalg.norm(d) - 1.) > 1e-9:
        msg = "Cylinder axis {} is not a unit vector".format(d)
        raise exceptions_.InvariantError(msg)
    return d


def _check_cylinder(radius, half_height):
    if not radius > 0:
        raise exceptions_.InvariantError(
            "Cylinder radius must be positive, got {}".format(radius))
    if not half_height > 0:
        raise exceptions_.InvariantError(
            "Cylinder half height must be positive, got {}".format(half_height))


def _flatten(lists, owners):
    """Turn a list of index lists into flat (owner, index) arrays."""
    lengths = np.fromiter((len(l) for l in lists), dtype=np.intp, count=len(lists))
    total = int(lengths.sum())
    flat = np.fromiter(itertools.chain.from_iterable(lists), dtype=np.intp,
                       count=total)
    return np.repeat(owners, lengths), flat


class SpatialIndex(object):
    """k-d tree over the points of a cloud.

    Query results are arrays of point indices into ``cloud.points``,
    sorted ascending.

    Parameters
    ----------
    cloud : PointCloud
      Non-empty cloud to index.
    chunk_size : int, optional
      Number of query centres handled per batch in the ``*_many``
      queries.

    """
    chunk_size = 4096

    def __init__(self, cloud, chunk_size=None):
        cloud.require_points()
        self.cloud = cloud
        self.points = cloud.points
        self.tree = cKDTree(self.points)
        if chunk_size is not None:
            self.chunk_size = chunk_size
        # The thin axis of the cloud (y for a wall) and a 2D tree over
        # the other two, used for batched cylinder queries.
        extents = np.ptp(self.points, axis=0)
        self.thin_axis = int(np.argmin(extents))
        self.plane_axes = [i for i in range(3) if i != self.thin_axis]
        self._tree2d = None
        self._thin_range = (self.points[:, self.thin_axis].min(),
                            self.points[:, self.thin_axis].max())

    def __len__(self):
        return self.points.shape[0]

    @property
    def tree2d(self):
        if self._tree2d is None:
            self._tree2d = cKDTree(self.points[:, self.plane_axes])
        return self._tree2d

    def nearest(self, points):
        """Distance to and index of the closest indexed point for each
        row of ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist, idx = self.tree.query(pts, k=1)
        return np.asarray(dist, dtype=float), np.asarray(idx, dtype=np.intp)

    def radius_search(self, center, r):
        """Indices of points with ``|p - center| <= r``."""
        if r < 0:
            raise exceptions_.InvariantError(
                "Search radius must be non-negative, got {}".format(r))
        idx = self.tree.query_ball_point(np.asarray(center, dtype=float), r)
        return np.array(sorted(idx), dtype=np.intp)

    def radius_search_many(self, centers, r):
        """List of index arrays, one per row of ``centers``."""
        if r < 0:
            raise exceptions_.InvariantError(
                "Search radius must be non-negative, got {}".format(r))
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        lists = self.tree.query_ball_point(centers, r)
        return [np.array(sorted(l), dtype=np.intp) for l in lists]

    def cylinder_search(self, center, direction, radius, half_height):
        """Indices of points inside a finite cylinder.

        A point belongs to the cylinder when its distance from the axis
        is at most ``radius`` and its offset along the axis from
        ``center`` is at most ``half_height`` in magnitude.

        """
        d = _check_unit(direction)
        _check_cylinder(radius, half_height)
        c = np.asarray(center, dtype=float)
        reach = np.hypot(radius, half_height) + CANDIDATE_SLACK
        cand = np.array(self.tree.query_ball_point(c, reach), dtype=np.intp)
        if cand.size == 0:
            return cand
        offsets = self.points[cand] - c
        axial = offsets @ d
        radial = np.linalg.norm(offsets - axial[:, None] * d, axis=1)
        keep = (radial <= radius) & (np.abs(axial) <= half_height)
        return np.sort(cand[keep])

    def _candidate_radii(self, centers, directions, radius, half_height):
        """Bound on the in-plane distance of any cylinder member from
        its centre, using the limited thickness of the cloud along the
        thin axis."""
        t = self.thin_axis
        n_t = np.abs(directions[:, t])
        sin_a = np.sqrt(np.clip(1. - n_t ** 2, 0., 1.))
        lo, hi = self._thin_range
        spread = np.maximum(np.abs(hi - centers[:, t]), np.abs(centers[:, t] - lo))
        with np.errstate(divide='ignore'):
            reach = np.where(n_t > 0, (spread + radius * sin_a) / n_t, np.inf)
        axial = np.minimum(half_height, reach)
        return axial * sin_a + radius + CANDIDATE_SLACK

    def iter_cylinder_members(self, centers, directions, radius, half_height,
                              progress=False, desc='cylinders'):
        """Batched cylinder query.

        Yields
        ------
        owner : np.ndarray
          Row of ``centers`` each membership belongs to.
        member : np.ndarray
          Index of the member point.
        axial : np.ndarray
          Signed offset of the member along its cylinder axis.

        """
        _check_cylinder(radius, half_height)
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.) > 1e-9):
            raise exceptions_.InvariantError("Cylinder axes must be unit vectors")
        rho = self._candidate_radii(centers, directions, radius, half_height)
        starts = range(0, centers.shape[0], self.chunk_size)
        if progress:
            starts = tqdm.tqdm(starts, desc=desc, unit='chunk')
        for start in starts:
            stop = min(start + self.chunk_size, centers.shape[0])
            block = np.arange(start, stop)
            lists = self.tree2d.query_ball_point(
                centers[start:stop][:, self.plane_axes], rho[start:stop])
            owner, member = _flatten(lists, block)
            if member.size == 0:
                continue
            offsets = self.points[member] - centers[owner]
            dirs = directions[owner]
            axial = np.einsum('ij,ij->i', offsets, dirs)
            radial = np.linalg.norm(offsets - axial[:, None] * dirs, axis=1)
            keep = (radial <= radius) & (np.abs(axial) <= half_height)
            log.debug("Cylinder chunk %d-%d: %d candidates, %d members",
                      start, stop, member.size, int(keep.sum()))
            yield owner[keep], member[keep], axial[keep]

    def cylinder_search_many(self, centers, directions, radius, half_height):
        """List of sorted index arrays, one per cylinder."""
        centers = np.atleast_2d(centers)
        found = [[] for _ in range(centers.shape[0])]
        for owner, member, _ in self.iter_cylinder_members(
                centers, directions, radius, half_height):
            for o, m in zip(owner, member):
                found[o].append(m)
        return [np.array(sorted(f), dtype=np.intp) for f in found]

    def cylinder_axial_stats(self, centers, directions, radius, half_height,
                             progress=False):
        """Count and mean axial offset of the points in each cylinder.

        Empty cylinders get a count of 0 and a mean of nan.

        """
        m = np.atleast_2d(centers).shape[0]
        counts = np.zeros(m, dtype=np.intp)
        sums = np.zeros(m)
        for owner, _, axial in self.iter_cylinder_members(
                centers, directions, radius, half_height, progress=progress):
            counts += np.bincount(owner, minlength=m)
            sums += np.bincount(owner, weights=axial, minlength=m)
        with np.errstate(invalid='ignore', divide='ignore'):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        return counts, means


def build_index(cloud):
    """Build a :py:class:`SpatialIndex` over ``cloud``."""
    return SpatialIndex(cloud)


def radius_search(index, center, r):
    return index.radius_search(center, r)


def cylinder_search(index, center, direction, radius, half_height):
    return index.cylinder_search(center, direction, radius, half_height)


def _spread_bits(v):
    """Insert two zero bits between each of the low 21 bits of ``v``."""
    v = v.astype(np.uint64) & np.uint64(0x1fffff)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1f00000000ffff)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1f0000ff0000ff)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100f00f00f00f00f)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10c30c30c30c30c3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def morton_codes(points):
    """Z-order codes of ``points`` quantised to 21 bits per axis over
    their bounding box."""
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    span = np.ptp(pts, axis=0)
    scale = np.where(span > 0, (2 ** MORTON_BITS - 1) / np.where(span > 0, span, 1.), 0.)
    q = np.floor((pts - lo) * scale).astype(np.uint64)
    return (_spread_bits(q[:, 0])
            | (_spread_bits(q[:, 1]) << np.uint64(1))
            | (_spread_bits(q[:, 2]) << np.uint64(2)))


def split_half_indices(cloud, seed=0):
    """Index arrays of the two halves produced by :py:func:`split_half`."""
    n = len(cloud)
    if n < 2:
        msg = "Cannot split {!r}: needs at least 2 points, got {}".format(
            cloud.source, n)
        raise exceptions_.DegenerateInputError(msg)
    rng = np.random.default_rng(seed)
    codes = morton_codes(cloud.points)
    order = np.lexsort((rng.random(n), codes))
    first = int(rng.integers(2))
    ref = np.sort(order[first::2])
    qry = np.sort(order[1 - first::2])
    return ref, qry


def split_half(cloud, seed=0):
    """Split ``cloud`` into two disjoint, spatially uniform halves.

    Points are sorted along a Morton curve and dealt alternately to the
    two halves. Both halves keep the input order of their points.

    Returns
    -------
    reference, query : PointCloud

    """
    ref, qry = split_half_indices(cloud, seed)
    log.debug("Split %d points into %d + %d", len(cloud), ref.size, qry.size)
    return (cloud.subset(ref, source='{}[half A]'.format(cloud.source)),
            cloud.subset(qry, source='{}[half B]'.format(cloud.source)))


class VoxelPartition(object):
    """Every point of a cloud assigned to the voxel
    ``floor((p - origin) / size)``.

    Attributes
    ----------
    size : float
      Voxel edge length in metres.
    origin : np.ndarray
      Grid anchor, the cloud's bounding-box minimum.
    keys : np.ndarray
      (M, 3) integer keys of the non-empty voxels.
    inverse : np.ndarray
      Voxel number (row of ``keys``) for each point.

    """
    def __init__(self, size, origin, keys, inverse):
        self.size = size
        self.origin = origin
        self.keys = keys
        self.inverse = inverse

    def __len__(self):
        return self.keys.shape[0]

    def members(self, voxel):
        return np.flatnonzero(self.inverse == voxel)

    def as_dict(self):
        order = np.argsort(self.inverse, kind='stable')
        bounds = np.searchsorted(self.inverse[order], np.arange(len(self) + 1))
        return {tuple(int(k) for k in self.keys[i]): order[bounds[i]:bounds[i + 1]]
                for i in range(len(self))}


def voxel_partition(cloud, size):
    if not size > 0:
        raise exceptions_.InvariantError(
            "Voxel size must be positive, got {}".format(size))
    cloud.require_points()
    origin = cloud.points.min(axis=0)
    keys = np.floor((cloud.points - origin) / size).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    return VoxelPartition(size, origin, uniq, np.asarray(inverse).reshape(-1))


def random_in_voxel(cloud, size, seed=0):
    """Keep one randomly chosen original point per non-empty voxel.

    The kept points stay in their input order.

    """
    part = voxel_partition(cloud, size)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(cloud))
    _, first = np.unique(part.inverse[perm], return_index=True)
    chosen = np.sort(perm[first])
    log.debug("Random-in-voxel %.4f m: %d -> %d points", size, len(cloud),
              chosen.size)
    return cloud.subset(chosen)


def subsample_min_distance(cloud, resolution, index=None):
    """Greedy subset where no two kept points are closer than
    ``resolution``. A point is kept unless an earlier kept point lies
    within ``resolution`` of it. Returns sorted indices."""
    if resolution < 0:
        raise exceptions_.InvariantError(
            "Resolution must be non-negative, got {}".format(resolution))
    n = len(cloud)
    if resolution == 0:
        return np.arange(n)
    if index is None:
        index = SpatialIndex(cloud)
    blocked = np.zeros(n, dtype=bool)
    kept = []
    for i in range(n):
        if blocked[i]:
            continue
        kept.append(i)
        blocked[index.tree.query_ball_point(cloud.points[i], resolution)] = True
    return np.array(kept, dtype=np.intp)
