# -*- coding: utf-8 -*-

"""Core geometric types for wall point clouds, plus file input and
output.

Point3
  A single point in metres.
PointCloud
  An ordered, immutable set of points in a tagged coordinate frame.
BoundingBox
  Axis-aligned box around a cloud.
RigidTransform
  Rotation and translation taking query coordinates to reference
  coordinates.
WallFrame
  Local frame with z up, y normal to the wall (negative toward the
  pit) and x along the wall.
Plane
  A plane given by a unit normal and offset.

"""

import os
import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import exceptions_
from .report import atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['Point3', 'PointCloud', 'BoundingBox', 'RigidTransform',
           'WallFrame', 'Plane', 'bounding_box', 'data_spacing',
           'data_spacing_from_extents', 'fit_plane', 'level_cloud',
           'apply_transform', 'to_wall_frame', 'from_wall_frame',
           'read_cloud', 'write_cloud']

log = logging.getLogger(__name__)

# Tolerances on rigid transforms and frames
ORTHO_TOL = 1e-9
UNIT_TOL = 1e-12

Point3 = namedtuple('Point3', ('x', 'y', 'z'))

FORMATS = ('xyz-ascii', 'ply-ascii')
EXTENSIONS = {
    '.xyz': 'xyz-ascii',
    '.txt': 'xyz-ascii',
    '.asc': 'xyz-ascii',
    '.ply': 'ply-ascii',
}


def _as_points(points):
    """Convert ``points`` to an (N, 3) float array and check that every
    coordinate is finite."""
    arr = np.array(points, dtype=float, copy=True)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim == 1 and arr.shape[0] == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        msg = "Points must have shape (N, 3), got {}".format(arr.shape)
        raise exceptions_.InvariantError(msg)
    finite = np.isfinite(arr).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        msg = "Non-finite coordinate at point index {}".format(bad)
        raise exceptions_.InvariantError(msg)
    arr.setflags(write=False)
    return arr


class PointCloud(object):
    """An ordered set of 3D points (metres) in a tagged coordinate
    frame.

    Parameters
    ----------
    points : array_like
      (N, 3) coordinates. Copied and made read-only.
    frame : str, optional
      One of :py:attr:`FRAMES`.
    source : str, optional
      Free-text label, usually the file the points came from.

    """
    FRAME_SCANNER = 'scanner'
    FRAME_SITE = 'site'
    FRAME_WALL = 'wall-local'
    FRAMES = (FRAME_SCANNER, FRAME_SITE, FRAME_WALL)

    def __init__(self, points, frame=FRAME_SCANNER, source=''):
        if frame not in self.FRAMES:
            msg = "Unknown frame tag {!r}; expected one of {}".format(
                frame, self.FRAMES)
            raise exceptions_.InvariantError(msg)
        self.points = _as_points(points)
        self.frame = frame
        self.source = source

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return "<PointCloud: {} points, frame={}, source={!r}>".format(
            len(self), self.frame, self.source)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    @property
    def z(self):
        return self.points[:, 2]

    def point(self, i):
        return Point3(*self.points[i])

    def subset(self, indices, source=None):
        """A new cloud holding only the points at ``indices``, in the
        order given."""
        src = self.source if source is None else source
        return PointCloud(self.points[np.asarray(indices, dtype=int)],
                          frame=self.frame, source=src)

    def with_points(self, points):
        """A new cloud with the same tags but different coordinates."""
        return PointCloud(points, frame=self.frame, source=self.source)

    def require_points(self, what='point cloud'):
        if len(self) == 0:
            msg = "Empty {} {!r}".format(what, self.source)
            raise exceptions_.EmptyInputError(msg)


class BoundingBox(namedtuple('BoundingBox', ('min_corner', 'max_corner'))):
    """Axis-aligned bounding box. Corners are :py:class:`Point3`."""
    __slots__ = ()

    @property
    def extents(self):
        return Point3(*(np.asarray(self.max_corner) - np.asarray(self.min_corner)))

    def contains(self, points, tol=0.):
        pts = np.atleast_2d(points)
        lo = np.asarray(self.min_corner) - tol
        hi = np.asarray(self.max_corner) + tol
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True, eq=False)
class RigidTransform(object):
    """Rotation then translation: ``p' = R p + t``.

    The rotation must be orthonormal with determinant +1 (both within
    1e-9), otherwise :py:exc:`InvariantError` is raised.

    """
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            msg = "Bad transform shapes: rotation {}, translation {}".format(
                R.shape, t.shape)
            raise exceptions_.InvariantError(msg)
        if not (np.isfinite(R).all() and np.isfinite(t).all()):
            raise exceptions_.InvariantError("Transform is not finite")
        ortho_err = np.abs(R.T @ R - np.eye(3)).max()
        det = np.linalg.det(R)
        if ortho_err > ORTHO_TOL or abs(det - 1.) > ORTHO_TOL:
            msg = ("Rotation not proper orthonormal "
                   "(orthogonality error {:.3g}, det {:.12f})".format(ortho_err, det))
            raise exceptions_.InvariantError(msg)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, 'rotation', R)
        object.__setattr__(self, 'translation', t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix):
        """Build from a 4x4 homogeneous matrix."""
        M = np.asarray(matrix, dtype=float)
        if M.shape != (4, 4):
            raise exceptions_.InvariantError(
                "Homogeneous matrix must be 4x4, got {}".format(M.shape))
        return cls(M[:3, :3], M[:3, 3])

    @classmethod
    def from_axis_angle(cls, axis, angle, translation=(0., 0., 0.)):
        """Rotation of ``angle`` radians about ``axis`` (Rodrigues)."""
        k = np.asarray(axis, dtype=float)
        k = k / np.linalg.norm(k)
        K = np.array([[0, -k[2], k[1]],
                      [k[2], 0, -k[0]],
                      [-k[1], k[0], 0]])
        R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)
        return cls(R, translation)

    def as_matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def inverse(self):
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other):
        """Transform equal to applying ``other`` first, then ``self``."""
        R = self.rotation @ other.rotation
        # Re-orthonormalise to stop rounding drift over many compositions
        u, _, vt = np.linalg.svd(R)
        R = u @ vt
        t = self.rotation @ other.translation + self.translation
        return RigidTransform(R, t)

    @property
    def rotation_angle(self):
        """Magnitude of the rotation, in radians."""
        c = (np.trace(self.rotation) - 1.) / 2.
        return float(np.arccos(np.clip(c, -1., 1.)))

    def to_dict(self):
        return {
            'rotation': self.rotation.tolist(),
            'translation': self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['rotation'], data['translation'])


class WallFrame(object):
    """Local wall coordinate frame.

    Parameters
    ----------
    origin : array_like
      Frame origin in the parent coordinates.
    axes : array_like
      3x3 matrix whose rows are the x (along wall), y (wall normal,
      negative toward the pit) and z (vertical up) unit axes.

    """
    UP = np.array([0., 0., 1.])

    def __init__(self, origin=(0., 0., 0.), axes=None):
        axes = np.eye(3) if axes is None else np.array(axes, dtype=float)
        origin = np.array(origin, dtype=float).reshape(-1)
        if axes.shape != (3, 3) or origin.shape != (3,):
            msg = "Wall frame needs a 3-vector origin and 3x3 axes"
            raise exceptions_.InvariantError(msg)
        if np.abs(axes @ axes.T - np.eye(3)).max() > ORTHO_TOL:
            raise exceptions_.InvariantError("Wall frame axes are not orthonormal")
        if abs(np.linalg.det(axes) - 1.) > ORTHO_TOL:
            raise exceptions_.InvariantError("Wall frame axes are not right-handed")
        if np.abs(axes[2] - self.UP).max() > ORTHO_TOL:
            msg = "Wall frame z axis {} is not vertical".format(axes[2])
            raise exceptions_.InvariantError(msg)
        axes.setflags(write=False)
        origin.setflags(write=False)
        self.origin = origin
        self.axes = axes

    def __repr__(self):
        return "<WallFrame origin={} y={}>".format(self.origin.tolist(),
                                                    self.axes[1].tolist())

    @classmethod
    def fit(cls, cloud, sensor=None):
        """Fit a wall frame to ``cloud``.

        y is the horizontal part of the best-fit-plane normal. When
        ``sensor`` is given, y is oriented so that -y points from the
        wall toward it. The origin is the cloud centroid.

        """
        plane = fit_plane(cloud)
        n = np.array([plane.normal[0], plane.normal[1], 0.])
        norm = np.linalg.norm(n)
        if norm < 1e-6:
            msg = "Cloud {!r} is horizontal; cannot fit a wall frame".format(
                cloud.source)
            raise exceptions_.DegenerateInputError(msg)
        y = n / norm
        centroid = cloud.points.mean(axis=0)
        if sensor is not None and np.dot(y, np.asarray(sensor) - centroid) > 0:
            y = -y
        x = np.cross(y, cls.UP)
        log.debug("Fitted wall frame: origin %s, y %s", centroid, y)
        return cls(centroid, np.vstack([x, y, cls.UP]))

    def transform(self):
        """Rigid transform from parent coordinates into the wall
        frame."""
        return RigidTransform(self.axes, -self.axes @ self.origin)

    def to_dict(self):
        return {'origin': self.origin.tolist(), 'axes': self.axes.tolist()}


@dataclass(frozen=True, eq=False)
class Plane(object):
    """Plane ``normal . p = offset`` with a unit normal.

    ``rms`` is the residual RMS of the fit that produced the plane,
    when there was one.

    """
    normal: np.ndarray
    offset: float = 0.
    rms: float = 0.

    def __post_init__(self):
        n = np.array(self.normal, dtype=float).reshape(-1)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.) > UNIT_TOL:
            msg = "Plane normal {} is not a unit 3-vector".format(n)
            raise exceptions_.InvariantError(msg)
        n.setflags(write=False)
        object.__setattr__(self, 'normal', n)
        object.__setattr__(self, 'offset', float(self.offset))

    @classmethod
    def through(cls, point, normal):
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(n, float(np.dot(n, point)))

    def flipped(self):
        return Plane(-self.normal, -self.offset, self.rms)

    def oriented(self, direction):
        """This plane, flipped if needed so the normal has a
        non-negative component along ``direction``."""
        if np.dot(self.normal, direction) < 0:
            return self.flipped()
        return self

    def basis(self):
        """In-plane unit axes ``(e1, e2)`` as a 2x3 array.

        For steep planes e1 is horizontal and e2 climbs the plane; for
        near-horizontal planes e1 follows global x.

        """
        n = self.normal
        up = np.array([0., 0., 1.])
        if abs(np.dot(n, up)) < 0.9:
            e2 = up - np.dot(up, n) * n
            e2 /= np.linalg.norm(e2)
            e1 = np.cross(n, e2)
        else:
            ex = np.array([1., 0., 0.])
            e1 = ex - np.dot(ex, n) * n
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(n, e1)
        return np.vstack([e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2)])

    def project(self, points):
        """In-plane (u, v) coordinates of ``points``."""
        return np.asarray(points, dtype=float) @ self.basis().T

    def signed_distance(self, points):
        return np.asarray(points, dtype=float) @ self.normal - self.offset


def bounding_box(cloud):
    """Smallest axis-aligned box holding every point of ``cloud``."""
    cloud.require_points()
    return BoundingBox(Point3(*cloud.points.min(axis=0)),
                       Point3(*cloud.points.max(axis=0)))


def fit_plane(cloud):
    """Least-squares plane through ``cloud``.

    The normal is the direction of least variance of the points. Its
    sign is chosen so that its largest component is positive.

    Raises
    ------
    DegenerateInputError
      Fewer than three points, or all points on a line.

    """
    pts = cloud.points if isinstance(cloud, PointCloud) else _as_points(cloud)
    if pts.shape[0] < 3:
        msg = "Plane fit needs at least 3 points, got {}".format(pts.shape[0])
        raise exceptions_.DegenerateInputError(msg)
    centroid = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    if s[0] == 0 or s[1] <= 1e-12 * s[0]:
        raise exceptions_.DegenerateInputError("Plane fit on collinear points")
    n = vt[2]
    if n[np.argmax(np.abs(n))] < 0:
        n = -n
    n = n / np.linalg.norm(n)
    rms = float(s[2] / np.sqrt(pts.shape[0]))
    return Plane(n, float(np.dot(n, centroid)), rms)


def level_cloud(cloud):
    """Rotate ``cloud`` so its best-fit plane becomes the x-y plane.

    Returns
    -------
    levelled : np.ndarray
      (N, 3) coordinates in the levelled frame.
    rotation : RigidTransform
      The rotation that was applied.

    """
    plane = fit_plane(cloud)
    e1, e2 = plane.basis()
    R = np.vstack([e1, e2, np.cross(e1, e2)])
    rot = RigidTransform(R, np.zeros(3))
    return rot.apply(cloud.points), rot


def data_spacing_from_extents(lx, ly, n):
    """Mean point spacing ``sqrt(lx * ly) / (sqrt(n) - 1)`` for ``n``
    points spread over an ``lx`` by ``ly`` box."""
    if n < 2:
        msg = "Data spacing needs at least 2 points, got {}".format(n)
        raise exceptions_.DegenerateInputError(msg)
    if not (lx > 0 and ly > 0):
        msg = "Data spacing box has zero area ({} x {})".format(lx, ly)
        raise exceptions_.DegenerateInputError(msg)
    return float(np.sqrt(lx * ly) / (np.sqrt(n) - 1.))


def data_spacing(cloud):
    """Mean data spacing of ``cloud`` in metres.

    The cloud is levelled into its best-fit plane and the spacing
    taken from the axis-aligned box of the levelled points. Clouds
    with only two points are not levelled.

    """
    n = len(cloud)
    if n < 2:
        msg = "Data spacing of {!r} needs at least 2 points, got {}".format(
            cloud.source, n)
        raise exceptions_.DegenerateInputError(msg)
    if n == 2:
        uv = cloud.points[:, :2]
    else:
        try:
            uv = fit_plane(cloud).project(cloud.points)
        except exceptions_.DegenerateInputError:
            msg = "Data spacing of {!r}: points are collinear".format(cloud.source)
            raise exceptions_.DegenerateInputError(msg)
    lx, ly = np.ptp(uv, axis=0)
    return data_spacing_from_extents(lx, ly, n)


def apply_transform(cloud, transform):
    """Apply a rigid transform to every point of ``cloud``."""
    return cloud.with_points(transform.apply(cloud.points))


def to_wall_frame(cloud, frame):
    """Express ``cloud`` in the axes of ``frame``."""
    cloud.require_points()
    if not isinstance(frame, WallFrame):
        raise exceptions_.InvariantError("Expected a WallFrame, got {!r}".format(frame))
    pts = frame.transform().apply(cloud.points)
    return PointCloud(pts, frame=PointCloud.FRAME_WALL, source=cloud.source)


def from_wall_frame(cloud, frame, tag=PointCloud.FRAME_SITE):
    """Inverse of :py:func:`to_wall_frame`."""
    pts = frame.transform().inverse().apply(cloud.points)
    return PointCloud(pts, frame=tag, source=cloud.source)


# File input and output
# ---------------------

def _guess_format(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS:
            raise exceptions_.CloudFormatError(
                "Unknown cloud format {!r}".format(fmt), path=path)
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    try:
        return EXTENSIONS[ext]
    except KeyError:
        raise exceptions_.CloudFormatError(
            "Cannot tell cloud format from extension {!r}".format(ext), path=path)


def _parse_xyz(path, fh):
    rows = []
    frame = PointCloud.FRAME_SCANNER
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith('#'):
            # Frame tag written by write_cloud
            body = line.lstrip('#').strip()
            if body.startswith('frame:'):
                frame = body.split(':', 1)[1].strip()
            continue
        fields = line.replace(',', ' ').split()
        if len(fields) != 3:
            raise exceptions_.CloudFormatError(
                "expected 3 fields, got {}".format(len(fields)), path, lineno)
        try:
            xyz = [float(f) for f in fields]
        except ValueError:
            raise exceptions_.CloudFormatError(
                "cannot parse {!r}".format(line), path, lineno)
        if not all(np.isfinite(xyz)):
            raise exceptions_.CloudFormatError(
                "non-finite coordinate in {!r}".format(line), path, lineno)
        rows.append(xyz)
    return rows, frame


def _parse_ply(path, fh):
    lines = iter(enumerate(fh, start=1))
    try:
        _, magic = next(lines)
    except StopIteration:
        raise exceptions_.CloudFormatError("empty file", path, 1)
    if magic.strip() != 'ply':
        raise exceptions_.CloudFormatError("missing 'ply' magic", path, 1)
    elements = []
    frame = PointCloud.FRAME_SCANNER
    for lineno, line in lines:
        words = line.split()
        if not words or words[0] == 'obj_info':
            continue
        if words[0] == 'format':
            if len(words) < 2 or words[1] != 'ascii':
                raise exceptions_.CloudFormatError(
                    "only ASCII PLY is supported", path, lineno)
        elif words[0] == 'comment':
            if len(words) >= 3 and words[1] == 'frame:':
                frame = words[2]
        elif words[0] == 'element':
            elements.append((words[1], int(words[2]), []))
        elif words[0] == 'property':
            if not elements:
                raise exceptions_.CloudFormatError(
                    "property before element", path, lineno)
            elements[-1][2].append(words[-1])
        elif words[0] == 'end_header':
            break
        else:
            raise exceptions_.CloudFormatError(
                "unexpected header line {!r}".format(line.strip()), path, lineno)
    else:
        raise exceptions_.CloudFormatError("missing end_header", path)
    rows = []
    for name, count, props in elements:
        if name == 'vertex':
            try:
                cols = [props.index(c) for c in 'xyz']
            except ValueError:
                raise exceptions_.CloudFormatError(
                    "vertex element lacks x, y, z properties", path)
        for _ in range(count):
            try:
                lineno, line = next(lines)
            except StopIteration:
                raise exceptions_.CloudFormatError(
                    "file ends inside element {!r}".format(name), path)
            if name != 'vertex':
                continue
            fields = line.split()
            if len(fields) < len(props):
                raise exceptions_.CloudFormatError(
                    "expected {} fields, got {}".format(len(props), len(fields)),
                    path, lineno)
            try:
                xyz = [float(fields[c]) for c in cols]
            except ValueError:
                raise exceptions_.CloudFormatError(
                    "cannot parse {!r}".format(line.strip()), path, lineno)
            if not all(np.isfinite(xyz)):
                raise exceptions_.CloudFormatError(
                    "non-finite coordinate in {!r}".format(line.strip()), path, lineno)
            rows.append(xyz)
        if name == 'vertex':
            break
    return rows, frame


def read_cloud(path, format=None, frame=None):
    """Read a point cloud from an ASCII xyz or PLY file.

    Parameters
    ----------
    path : str
      File to read.
    format : str, optional
      ``'xyz-ascii'`` or ``'ply-ascii'``. Guessed from the extension
      if omitted.
    frame : str, optional
      Frame tag for the result. Defaults to the tag stored in the
      file, or ``'scanner'``.

    Raises
    ------
    CloudFormatError
      The file is malformed; the message names the line.

    """
    fmt = _guess_format(path, format)
    with open(path, 'r') as fh:
        if fmt == 'xyz-ascii':
            rows, stored_frame = _parse_xyz(path, fh)
        else:
            rows, stored_frame = _parse_ply(path, fh)
    tag = frame or stored_frame
    if tag not in PointCloud.FRAMES:
        tag = PointCloud.FRAME_SCANNER
    log.debug("Read %d points from %s", len(rows), path)
    return PointCloud(np.array(rows, dtype=float).reshape(-1, 3), frame=tag,
                      source=str(path))


def write_cloud(cloud, path, format=None):
    """Write ``cloud`` with 17 significant digits per coordinate."""
    fmt = _guess_format(path, format)
    with atomic_write(path) as fh:
        if fmt == 'xyz-ascii':
            fh.write("# frame: {}\n".format(cloud.frame))
        else:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write("comment frame: {}\n".format(cloud.frame))
            fh.write("element vertex {}\n".format(len(cloud)))
            fh.write("property double x\nproperty double y\nproperty double z\n")
            fh.write("end_header\n")
        np.savetxt(fh, cloud.points, fmt='%.17g')
    log.debug("Wrote %d points to %s", len(cloud), path)
