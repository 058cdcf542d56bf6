# -*- coding: utf-8 -*-

"""2.5D triangulated surfaces (TIN) over a projection plane.

TinMesh
  Delaunay triangulation of a cloud's in-plane projection, lifted
  back onto the original 3D points.

The mesh supports signed point-to-mesh distances (cloud-to-mesh
comparison) and interpolation of the out-of-plane height at in-plane
locations (mesh-to-mesh comparison).

"""

import logging
from collections import namedtuple
from fractions import Fraction

import numpy as np
from scipy.spatial import Delaunay, cKDTree
import tqdm

try:
    from scipy.spatial import QhullError
except ImportError:  # older scipy
    from scipy.spatial.qhull import QhullError

from . import exceptions_
from .cloudcore import fit_plane
from .report import atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['TinMesh', 'delaunay_tin', 'in_circumcircle',
           'point_to_mesh_distance', 'mesh_distances', 'normal_distances',
           'height_at', 'heights_at', 'closest_points_on_triangles', 'write_obj']

log = logging.getLogger(__name__)

MeshDistance = namedtuple('MeshDistance', ('distance', 'in_footprint'))
HeightSample = namedtuple('HeightSample', ('height', 'in_footprint'))

# Relative area below which a projected triangle counts as flat
MIN_RELATIVE_AREA = 1e-12
# Float in-circle results smaller than this fraction of the
# determinant's magnitude bound are re-evaluated exactly
INCIRCLE_FILTER = 1e-12


def _incircle_terms(a, b, c, d):
    rows = []
    for p in (a, b, c):
        dx = p[..., 0] - d[..., 0]
        dy = p[..., 1] - d[..., 1]
        rows.append((dx, dy, dx * dx + dy * dy))
    (adx, ady, ad2), (bdx, bdy, bd2), (cdx, cdy, cd2) = rows
    det = (adx * (bdy * cd2 - bd2 * cdy)
           - ady * (bdx * cd2 - bd2 * cdx)
           + ad2 * (bdx * cdy - bdy * cdx))
    permanent = (np.abs(adx) * (np.abs(bdy * cd2) + np.abs(bd2 * cdy))
                 + np.abs(ady) * (np.abs(bdx * cd2) + np.abs(bd2 * cdx))
                 + np.abs(ad2) * (np.abs(bdx * cdy) + np.abs(bdy * cdx)))
    orient = ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
              - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))
    return det, permanent, orient


def _incircle_exact(a, b, c, d):
    a, b, c, d = [tuple(Fraction(float(v)) for v in p[:2]) for p in (a, b, c, d)]
    m = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        m.append((dx, dy, dx * dx + dy * dy))
    det = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
           - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
           + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
    orient = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (det > 0) - (det < 0), (orient > 0) - (orient < 0)


def in_circumcircle(a, b, c, d):
    """Whether 2D point ``d`` lies inside the circle through ``a``,
    ``b``, ``c``.

    Returns 1 inside, 0 on the circle and -1 outside, whatever the
    winding of the triangle. Near-zero float results are settled with
    exact rational arithmetic.

    """
    a, b, c, d = [np.asarray(p, dtype=float) for p in (a, b, c, d)]
    det, permanent, orient = _incircle_terms(a, b, c, d)
    if abs(det) > INCIRCLE_FILTER * permanent and orient != 0:
        return int(np.sign(det) * np.sign(orient))
    sdet, sorient = _incircle_exact(a, b, c, d)
    if sorient == 0:
        msg = "In-circle test on a degenerate triangle"
        raise exceptions_.DegenerateInputError(msg)
    return sdet * sorient


class TinMesh(object):
    """Triangulated surface over a projection plane.

    Attributes
    ----------
    vertices : np.ndarray
      (M, 3) original cloud points used as vertices.
    vertex_ids : np.ndarray
      Index of each vertex in the source cloud.
    triangles : np.ndarray
      (T, 3) vertex indices.
    plane : Plane
      Projection plane.
    uv : np.ndarray
      (M, 2) in-plane coordinates of the vertices.
    heights : np.ndarray
      Signed distance of each vertex from the plane.

    """
    chunk_size = 4096
    # Triangles with a bounding radius above this multiple of the median
    # are tested against every query point instead of through the tree
    LARGE_TRIANGLE_FACTOR = 4.

    def __init__(self, vertices, vertex_ids, plane, delaunay):
        self.vertices = vertices
        self.vertex_ids = vertex_ids
        self.plane = plane
        self.uv = delaunay.points
        self.heights = plane.signed_distance(vertices)
        self.delaunay = delaunay
        simplices = delaunay.simplices
        pts = self.uv[simplices]
        area2 = np.abs((pts[:, 1, 0] - pts[:, 0, 0]) * (pts[:, 2, 1] - pts[:, 0, 1])
                       - (pts[:, 1, 1] - pts[:, 0, 1]) * (pts[:, 2, 0] - pts[:, 0, 0]))
        edge2 = np.max([np.sum((pts[:, i] - pts[:, j]) ** 2, axis=1)
                        for i, j in ((0, 1), (1, 2), (2, 0))], axis=0)
        good = area2 > MIN_RELATIVE_AREA * edge2
        if not good.any():
            raise exceptions_.DegenerateInputError("All projected triangles are flat")
        self.simplex_to_triangle = np.full(len(simplices), -1, dtype=np.intp)
        self.simplex_to_triangle[good] = np.arange(good.sum())
        self.triangles = simplices[good]
        if (~good).any():
            log.debug("Dropped %d flat triangles", int((~good).sum()))
        self._vertex_tree = None
        self._centroid_tree = None

    def __repr__(self):
        return "<TinMesh: {} vertices, {} triangles>".format(
            len(self.vertices), len(self.triangles))

    @property
    def vertex_tree(self):
        if self._vertex_tree is None:
            # Only vertices that belong to a triangle bound the distance
            used = np.unique(self.triangles)
            self._vertex_tree = cKDTree(self.vertices[used])
        return self._vertex_tree

    def triangle_normals(self):
        """Unit normals of the 3D triangles, on the side of the plane
        normal."""
        tri = self.vertices[self.triangles]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        flip = n @ self.plane.normal < 0
        n[flip] *= -1
        return n

    def locate(self, uv):
        """Triangle containing each in-plane location, -1 outside the
        footprint."""
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        simplex = self.delaunay.find_simplex(uv)
        tri = np.where(simplex >= 0, self.simplex_to_triangle[simplex], -1)
        # Locations that landed on a dropped flat simplex lie on an
        # edge of a neighbour
        for i in np.flatnonzero((simplex >= 0) & (tri < 0)):
            for nb in self.delaunay.neighbors[simplex[i]]:
                if nb < 0 or self.simplex_to_triangle[nb] < 0:
                    continue
                bary = self._barycentric(np.array([nb]), uv[i:i + 1])
                if np.all(bary >= -1e-12):
                    tri[i] = self.simplex_to_triangle[nb]
                    break
        return tri

    def _barycentric(self, simplices, uv):
        T = self.delaunay.transform[simplices]
        b = np.einsum('ijk,ik->ij', T[:, :2, :], uv - T[:, 2, :])
        return np.column_stack([b, 1. - b.sum(axis=1)])

    def heights_at(self, uv):
        """Interpolated heights and footprint flags at ``uv``."""
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        tri = self.locate(uv)
        inside = tri >= 0
        heights = np.full(uv.shape[0], np.nan)
        if inside.any():
            simplices = np.flatnonzero(self.simplex_to_triangle >= 0)[tri[inside]]
            bary = self._barycentric(simplices, uv[inside])
            verts = self.delaunay.simplices[simplices]
            heights[inside] = np.sum(bary * self.heights[verts], axis=1)
        return heights, inside

    def delaunay_violations(self, tol=INCIRCLE_FILTER):
        """(triangle, vertex) pairs breaking the empty-circumcircle
        rule. An empty array means the mesh is Delaunay."""
        uv = self.uv
        tri = uv[self.triangles]
        found = []
        for start in range(0, len(tri), 256):
            block = tri[start:start + 256]
            a = block[:, None, 0, :]
            b = block[:, None, 1, :]
            c = block[:, None, 2, :]
            det, permanent, orient = _incircle_terms(a, b, c, uv[None, :, :])
            inside = det * np.sign(orient) > tol * permanent
            for t, v in zip(*np.nonzero(inside)):
                t = t + start
                if v in self.triangles[t]:
                    continue
                if in_circumcircle(*uv[self.triangles[t]], uv[v]) > 0:
                    found.append((t, v))
        return np.array(found, dtype=np.intp).reshape(-1, 2)


def delaunay_tin(cloud, plane=None):
    """Triangulate ``cloud`` over ``plane``.

    Points whose projections coincide with an earlier point's are
    dropped. The plane defaults to the cloud's best-fit plane.

    Raises
    ------
    DegenerateInputError
      Fewer than three distinct projections, or all collinear.

    """
    cloud.require_points()
    if plane is None:
        plane = fit_plane(cloud)
    uv = plane.project(cloud.points)
    _, first = np.unique(uv, axis=0, return_index=True)
    keep = np.sort(first)
    if keep.size < 3:
        msg = "Cannot mesh {!r}: only {} distinct projected points".format(
            cloud.source, keep.size)
        raise exceptions_.DegenerateInputError(msg)
    centred = uv[keep] - uv[keep].mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    if s[0] == 0 or s[1] <= 1e-12 * s[0]:
        msg = "Cannot mesh {!r}: projected points are collinear".format(cloud.source)
        raise exceptions_.DegenerateInputError(msg)
    try:
        tri = Delaunay(uv[keep])
    except QhullError as e:
        msg = "Cannot mesh {!r}: {}".format(cloud.source, e)
        raise exceptions_.DegenerateInputError(msg)
    mesh = TinMesh(cloud.points[keep], keep, plane, tri)
    log.debug("Meshed %r: %d vertices, %d triangles", cloud.source,
              len(mesh.vertices), len(mesh.triangles))
    return mesh


def closest_points_on_triangles(p, a, b, c):
    """Closest point to each ``p[i]`` on triangle ``(a[i], b[i], c[i])``."""
    ab = b - a
    ac = c - a
    ap = p - a
    bp = p - b
    cp = p - c
    dot = lambda u, v: np.einsum('ij,ij->i', u, v)
    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    with np.errstate(divide='ignore', invalid='ignore'):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1. / (va + vb + vc)
        v = vb * denom
        w = vc * denom
    conds = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
    ]
    choices = [a, b, a + t_ab[:, None] * ab, c, a + t_ac[:, None] * ac,
               b + t_bc[:, None] * (c - b)]
    interior = a + v[:, None] * ab + w[:, None] * ac
    out = interior.copy()
    # First matching region wins
    done = np.zeros(len(p), dtype=bool)
    for cond, choice in zip(conds, choices):
        sel = cond & ~done
        out[sel] = choice[sel]
        done |= sel
    return out


def _centroid_index(mesh):
    if mesh._centroid_tree is None:
        tri = mesh.vertices[mesh.triangles]
        centroids = tri.mean(axis=1)
        radii = np.linalg.norm(tri - centroids[:, None, :], axis=2).max(axis=1)
        large = radii > mesh.LARGE_TRIANGLE_FACTOR * np.median(radii)
        small = np.flatnonzero(~large)
        mesh._centroid_tree = (cKDTree(centroids[small]), small,
                               np.flatnonzero(large), centroids, radii,
                               radii[small].max() if small.size else 0.)
    return mesh._centroid_tree


def mesh_distances(points, mesh, progress=False):
    """Signed distance from each point to the mesh surface.

    The sign follows the side of the closest triangle's normal, which
    is oriented along the projection plane's normal. Points whose
    projection falls outside the triangulated footprint are flagged.

    Returns
    -------
    distances : np.ndarray
    in_footprint : np.ndarray of bool

    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    tree, small, large, centroids, radii, r_small = _centroid_index(mesh)
    normals = mesh.triangle_normals()
    tri_pts = mesh.vertices[mesh.triangles]
    dist = np.empty(n)
    signs = np.empty(n)
    starts = range(0, n, mesh.chunk_size)
    if progress:
        starts = tqdm.tqdm(starts, desc='point-to-mesh', unit='chunk')
    for start in starts:
        stop = min(start + mesh.chunk_size, n)
        block = pts[start:stop]
        ids = np.arange(start, stop)
        # Nearest vertex bounds the distance to the surface
        bound, _ = mesh.vertex_tree.query(block)
        lists = tree.query_ball_point(block, bound + r_small + 1e-12)
        lengths = np.fromiter((len(l) for l in lists), dtype=np.intp, count=len(lists))
        flat = np.fromiter((i for l in lists for i in l), dtype=np.intp,
                           count=int(lengths.sum()))
        owner = np.repeat(ids, lengths)
        cand = small[flat]
        if large.size:
            owner = np.concatenate([owner, np.repeat(ids, large.size)])
            cand = np.concatenate([cand, np.tile(large, ids.size)])
        reach = np.linalg.norm(pts[owner] - centroids[cand], axis=1) - radii[cand]
        keep = reach <= bound[owner - start] + 1e-12
        owner, cand = owner[keep], cand[keep]
        tri = tri_pts[cand]
        q = closest_points_on_triangles(pts[owner], tri[:, 0], tri[:, 1], tri[:, 2])
        diff = pts[owner] - q
        d = np.linalg.norm(diff, axis=1)
        order = np.lexsort((cand, d, owner))
        owner_sorted = owner[order]
        first = order[np.r_[True, owner_sorted[1:] != owner_sorted[:-1]]]
        side = np.einsum('ij,ij->i', diff[first], normals[cand[first]])
        fallback = diff[first] @ mesh.plane.normal
        side = np.where(side != 0, side, fallback)
        dist[owner[first]] = d[first]
        signs[owner[first]] = np.where(side < 0, -1., 1.)
    in_footprint = mesh.locate(mesh.plane.project(pts)) >= 0
    return signs * dist, in_footprint


def point_to_mesh_distance(p, mesh):
    """Signed distance from a single point to the mesh."""
    d, inside = mesh_distances(np.asarray(p, dtype=float).reshape(1, 3), mesh)
    return MeshDistance(float(d[0]), bool(inside[0]))


def normal_distances(points, mesh):
    """Offset of each point from the mesh along the projection plane
    normal, measured to the triangle the point projects into.

    Returns
    -------
    distances : np.ndarray
      nan where the projection falls outside the footprint.
    in_footprint : np.ndarray of bool

    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    heights, inside = mesh.heights_at(mesh.plane.project(pts))
    return mesh.plane.signed_distance(pts) - heights, inside


def heights_at(mesh, uv):
    return mesh.heights_at(uv)


def height_at(mesh, u, v):
    """Height of the mesh above its plane at in-plane ``(u, v)``; nan
    with ``in_footprint`` False outside the triangulation."""
    h, inside = mesh.heights_at([[u, v]])
    return HeightSample(float(h[0]), bool(inside[0]))


def write_obj(mesh, path):
    """Export ``mesh`` as Wavefront OBJ text."""
    with atomic_write(path) as fh:
        fh.write("# wallscan TIN: {} vertices, {} triangles\n".format(
            len(mesh.vertices), len(mesh.triangles)))
        np.savetxt(fh, mesh.vertices, fmt='v %.17g %.17g %.17g')
        np.savetxt(fh, mesh.triangles + 1, fmt='f %d %d %d')
