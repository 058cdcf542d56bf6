# -*- coding: utf-8 -*-

"""Bring a query scan into the coordinate system of a reference scan.

NormalField
  Per-point surface normals and their validity.
IcpParams
  Settings for point-to-plane ICP.
RegistrationResult
  Transform found by a registration together with its fit statistics.
QcReport
  Cloud-to-mesh statistics between a reference and a registered
  query.

Two strategies are offered: closed-form fitting to corresponding
targets (:py:func:`register_targets`) and point-to-plane ICP on stable
structures such as building facades (:py:func:`icp_point_to_plane`).

"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple, List

import numpy as np
import tqdm

from . import exceptions_
from .cloudcore import RigidTransform, data_spacing
from .spatial import SpatialIndex

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['NormalField', 'IcpParams', 'RegistrationResult', 'QcReport',
           'normals_at', 'estimate_normals', 'register_targets',
           'icp_point_to_plane', 'registration_qc']

log = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 10


@dataclass(frozen=True, eq=False)
class NormalField(object):
    """Unit normals for each point of a cloud. Invalid normals are nan.
    """
    normals: np.ndarray
    valid: np.ndarray
    radius: float
    sensor: Optional[np.ndarray] = None

    def __len__(self):
        return self.normals.shape[0]

    @property
    def valid_fraction(self):
        return float(self.valid.mean()) if len(self) else 0.


def normals_at(index, centers, radius, sensor=None, chunk_size=8192,
               progress=False):
    """Estimate surface normals at arbitrary locations.

    The normal at each centre is the least-variance direction of the
    indexed points within ``radius``. It is invalid when fewer than
    three neighbours are found or they are collinear.

    Parameters
    ----------
    index : SpatialIndex
      Points supplying the neighbourhoods.
    centers : np.ndarray
      (M, 3) evaluation locations.
    radius : float
      Neighbourhood radius, metres.
    sensor : array_like, optional
      If given, normals are flipped to face it.

    Returns
    -------
    normals : np.ndarray
      (M, 3), nan where invalid.
    valid : np.ndarray of bool

    """
    if not radius > 0:
        raise exceptions_.InvariantError(
            "Normal radius must be positive, got {}".format(radius))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m = centers.shape[0]
    normals = np.full((m, 3), np.nan)
    valid = np.zeros(m, dtype=bool)
    starts = range(0, m, chunk_size)
    if progress:
        starts = tqdm.tqdm(starts, desc='normals', unit='chunk')
    for start in starts:
        stop = min(start + chunk_size, m)
        block = centers[start:stop]
        k = stop - start
        lists = index.tree.query_ball_point(block, radius)
        lengths = np.fromiter((len(l) for l in lists), dtype=np.intp, count=k)
        member = np.fromiter((i for l in lists for i in l), dtype=np.intp,
                             count=int(lengths.sum()))
        owner = np.repeat(np.arange(k), lengths)
        # Offsets from the centre keep the covariance well conditioned
        d = index.points[member] - block[owner]
        counts = lengths.astype(float)
        safe = np.maximum(counts, 1.)
        mean = np.column_stack([np.bincount(owner, weights=d[:, i], minlength=k)
                                for i in range(3)]) / safe[:, None]
        cov = np.empty((k, 3, 3))
        for i in range(3):
            for j in range(i, 3):
                s = np.bincount(owner, weights=d[:, i] * d[:, j], minlength=k)
                cov[:, i, j] = cov[:, j, i] = s / safe - mean[:, i] * mean[:, j]
        evals, evecs = np.linalg.eigh(cov)
        ok = (lengths >= 3) & (evals[:, 1] > 1e-12 * np.maximum(evals[:, 2], 1e-300))
        n = evecs[:, :, 0]
        normals[start:stop][ok] = n[ok]
        valid[start:stop] = ok
    if sensor is not None:
        towards = np.asarray(sensor, dtype=float) - centers
        flip = valid & (np.einsum('ij,ij->i', np.nan_to_num(normals), towards) < 0)
        normals[flip] *= -1
    normals[valid] /= np.linalg.norm(normals[valid], axis=1)[:, None]
    log.debug("Estimated %d normals (%d invalid) with radius %.4f m",
              m, int((~valid).sum()), radius)
    return normals, valid


def estimate_normals(cloud, radius, sensor=None, index=None, progress=False):
    """Normals of ``cloud`` from plane fits within ``radius`` of each
    point, oriented toward ``sensor``."""
    cloud.require_points()
    if index is None:
        index = SpatialIndex(cloud)
    normals, valid = normals_at(index, cloud.points, radius, sensor=sensor,
                                progress=progress)
    normals.setflags(write=False)
    valid.setflags(write=False)
    s = None if sensor is None else np.asarray(sensor, dtype=float)
    return NormalField(normals, valid, radius, s)


@dataclass(frozen=True)
class IcpParams(object):
    """Settings for :py:func:`icp_point_to_plane`.

    Attributes
    ----------
    max_iterations : int
      Upper limit on iterations.
    translation_tol, rotation_tol : float
      Convergence thresholds on the per-iteration update (metres,
      radians).
    rejection_factor : float
      Correspondences whose point-to-plane residual exceeds this
      multiple of the median absolute residual are dropped.
    emphasis_box : tuple, optional
      ``(min corner, max corner)`` of a region whose correspondences
      get ``emphasis_weight``.
    emphasis_weight : float
      Weight (at least 1) for correspondences in the emphasis box.
    normal_radius : float, optional
      Radius for reference normals; defaults to twice the reference
      data spacing.
    initial : RigidTransform, optional
      Starting guess.

    """
    max_iterations: int = 50
    translation_tol: float = 1e-6
    rotation_tol: float = 1e-7
    rejection_factor: float = 3.
    emphasis_box: Optional[Tuple[Tuple[float, float, float],
                                 Tuple[float, float, float]]] = None
    emphasis_weight: float = 1.
    normal_radius: Optional[float] = None
    initial: Optional[RigidTransform] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise exceptions_.InvariantError(
                "max_iterations must be >= 1, got {}".format(self.max_iterations))
        if not self.rejection_factor > 1:
            raise exceptions_.InvariantError(
                "rejection_factor must be > 1, got {}".format(self.rejection_factor))
        if not self.emphasis_weight >= 1:
            raise exceptions_.InvariantError(
                "emphasis_weight must be >= 1, got {}".format(self.emphasis_weight))
        if self.normal_radius is not None and not self.normal_radius > 0:
            raise exceptions_.InvariantError(
                "normal_radius must be positive, got {}".format(self.normal_radius))
        if self.emphasis_box is not None:
            lo, hi = (np.asarray(c, dtype=float) for c in self.emphasis_box)
            if lo.shape != (3,) or hi.shape != (3,) or np.any(lo > hi):
                raise exceptions_.InvariantError(
                    "Bad emphasis box {}".format(self.emphasis_box))

    def weights(self, points):
        """Correspondence weights for reference ``points``."""
        w = np.ones(len(points))
        if self.emphasis_box is not None:
            lo, hi = (np.asarray(c, dtype=float) for c in self.emphasis_box)
            inside = np.all((points >= lo) & (points <= hi), axis=1)
            w[inside] = self.emphasis_weight
        return w


@dataclass
class RegistrationResult(object):
    """Outcome of a registration.

    ``transform`` maps query coordinates onto the reference. ``rmse``
    is taken over inlier correspondences (point-to-plane residuals for
    ICP, target misfits for target registration).

    """
    transform: RigidTransform
    rmse: float
    iterations: int
    inlier_fraction: float
    converged: bool = True
    rank: int = 6
    objective_history: List[float] = field(default_factory=list)

    def to_dict(self):
        d = self.transform.to_dict()
        d.update(rmse=self.rmse, iterations=self.iterations,
                 inlier_fraction=self.inlier_fraction, converged=self.converged,
                 rank=self.rank, rotation_angle=self.transform.rotation_angle)
        return d


def _pairs_array(pairs):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 3 or arr.shape[1:] != (2, 3):
        msg = "Target pairs must be a sequence of (reference, query) points"
        raise exceptions_.DegenerateConfigurationError(msg)
    return arr[:, 0, :], arr[:, 1, :]


def register_targets(pairs):
    """Least-squares rigid transform from corresponding target
    centroids.

    Parameters
    ----------
    pairs : sequence
      ``(reference point, query point)`` pairs.

    Raises
    ------
    DegenerateConfigurationError
      Fewer than three pairs, or the targets are collinear.

    """
    if len(pairs) < 3:
        msg = "Target registration needs at least 3 pairs, got {}".format(len(pairs))
        raise exceptions_.DegenerateConfigurationError(msg)
    ref, qry = _pairs_array(pairs)
    c_ref = ref.mean(axis=0)
    c_qry = qry.mean(axis=0)
    P = qry - c_qry
    Q = ref - c_ref
    for name, X in (('reference', Q), ('query', P)):
        s = np.linalg.svd(X, compute_uv=False)
        if s[0] == 0 or s[1] <= 1e-9 * s[0]:
            msg = "{} targets are collinear".format(name.capitalize())
            raise exceptions_.DegenerateConfigurationError(msg)
    H = P.T @ Q
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    D = np.diag([1., 1., d if d != 0 else 1.])
    R = Vt.T @ D @ U.T
    t = c_ref - R @ c_qry
    transform = RigidTransform(R, t)
    misfit = ref - transform.apply(qry)
    rmse = float(np.sqrt(np.mean(np.sum(misfit ** 2, axis=1))))
    log.info("Target registration on %d pairs: RMSE %.3g m", len(ref), rmse)
    return RegistrationResult(transform, rmse, iterations=1, inlier_fraction=1.)


def _rodrigues(omega):
    theta = np.linalg.norm(omega)
    if theta == 0:
        return np.eye(3)
    return RigidTransform.from_axis_angle(omega / theta, theta).rotation


def icp_point_to_plane(query, reference, reference_normals, params=None,
                       index=None):
    """Refine the alignment of ``query`` onto ``reference`` with
    point-to-plane ICP.

    Each iteration pairs every query point with its nearest reference
    point, drops pairs whose point-to-plane residual exceeds
    ``rejection_factor`` times the median absolute residual, and
    solves the linearised weighted point-to-plane problem for a small
    rotation and translation. A step that would raise the objective
    (the weighted mean squared residual of the kept pairs) is halved
    up to ``MAX_STEP_HALVINGS`` times; when none lowers it the
    iteration stops, so ``objective_history`` never increases.

    Raises
    ------
    RegistrationError
      When no correspondence survives rejection.

    """
    params = params or IcpParams()
    query.require_points('query cloud')
    reference.require_points('reference cloud')
    if index is None:
        index = SpatialIndex(reference)
    ref_pts = reference.points
    normals = reference_normals.normals
    nvalid = reference_normals.valid
    centre = ref_pts.mean(axis=0)
    weights_all = params.weights(ref_pts)
    transform = params.initial or RigidTransform.identity()
    R = transform.rotation.copy()
    t = transform.translation.copy()
    converged = False
    rank = 6
    iteration = 0

    def correspondences(R, t):
        moved = query.points @ R.T + t
        _, nn = index.nearest(moved)
        usable = nvalid[nn]
        if not usable.any():
            raise exceptions_.RegistrationError(
                "No query point matched a reference point with a valid normal")
        moved, nn = moved[usable], nn[usable]
        resid = np.einsum('ij,ij->i', moved - ref_pts[nn], normals[nn])
        limit = params.rejection_factor * np.median(np.abs(resid))
        inlier = np.abs(resid) <= limit
        if not inlier.any():
            raise exceptions_.RegistrationError("All ICP correspondences rejected")
        w = weights_all[nn[inlier]]
        objective = float(np.sum(w * resid[inlier] ** 2) / np.sum(w))
        return (moved[inlier], nn[inlier], resid[inlier], w, objective,
                inlier.sum() / len(query))

    def update(R, t, omega, delta):
        dR = _rodrigues(omega)
        return dR @ R, dR @ (t - centre) + delta + centre

    pairs = correspondences(R, t)
    history = [pairs[4]]
    for iteration in range(1, params.max_iterations + 1):
        moved, nn, resid, w, objective, _ = pairs
        n = normals[nn]
        q = moved - centre
        A = np.hstack([np.cross(q, n), n])
        sw = np.sqrt(w)
        Aw = A * sw[:, None]
        bw = -resid * sw
        normal_matrix = Aw.T @ Aw
        rhs = Aw.T @ bw
        x, _, rank, _ = np.linalg.lstsq(normal_matrix, rhs, rcond=1e-10)
        step = 1.
        for _ in range(MAX_STEP_HALVINGS + 1):
            omega, delta = step * x[:3], step * x[3:]
            R_new, t_new = update(R, t, omega, delta)
            trial = correspondences(R_new, t_new)
            if trial[4] <= objective:
                break
            step /= 2.
        else:
            log.debug("ICP iteration %d: no step lowers the objective %.4g",
                      iteration, objective)
            converged = True
            break
        R, t, pairs = R_new, t_new, trial
        history.append(trial[4])
        log.debug("ICP iteration %d: objective %.4g, step %g, |w| %.3g, |t| %.3g, "
                  "rank %d", iteration, trial[4], step, np.linalg.norm(omega),
                  np.linalg.norm(delta), rank)
        if (np.linalg.norm(delta) < params.translation_tol
                and np.linalg.norm(omega) < params.rotation_tol):
            converged = True
            break
    # Keep the rotation orthonormal after many small updates
    u, _, vt = np.linalg.svd(R)
    transform = RigidTransform(u @ vt, t)
    _, _, resid, _, _, fraction = correspondences(transform.rotation,
                                                  transform.translation)
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    if rank < 6:
        msg = ("ICP normal equations are rank deficient (rank {}); the geometry "
               "of {!r} does not constrain every degree of freedom".format(
                   rank, reference.source))
        warnings.warn(msg, RuntimeWarning)
        log.warning(msg)
    if not converged:
        msg = "ICP did not converge in {} iterations".format(params.max_iterations)
        warnings.warn(msg, RuntimeWarning)
        log.warning(msg)
    log.info("ICP: %d iterations, inlier RMSE %.3g m, inliers %.1f%%",
             iteration, rmse, 100 * fraction)
    return RegistrationResult(transform, rmse, iteration, float(fraction),
                              converged=converged, rank=int(rank),
                              objective_history=history)


def default_normal_radius(reference):
    """Twice the reference data spacing."""
    return 2. * data_spacing(reference)


@dataclass
class QcReport(object):
    """Cloud-to-mesh statistics of a registered pair."""
    mean: float
    max_abs: float
    rmse: float
    count: int
    out_of_footprint: int
    distances: object = None

    def to_dict(self):
        return {'mean_m': self.mean, 'max_abs_m': self.max_abs,
                'rmse_m': self.rmse, 'count': self.count,
                'out_of_footprint': self.out_of_footprint}


def registration_qc(reference, registered_query, plane=None):
    """Cloud-to-mesh distances from the registered query to the
    reference, with their mean and largest magnitude."""
    from .deform import c2m
    d = c2m(registered_query, reference, plane=plane, mode='closest')
    values = d.values[d.valid]
    if values.size == 0:
        msg = "No query point of {!r} overlaps the reference mesh".format(
            registered_query.source)
        raise exceptions_.EmptyInputError(msg)
    report = QcReport(mean=float(values.mean()),
                      max_abs=float(np.abs(values).max()),
                      rmse=float(np.sqrt(np.mean(values ** 2))),
                      count=int(values.size),
                      out_of_footprint=int(np.sum(d.reasons == d.OUT_OF_FOOTPRINT)),
                      distances=d)
    log.info("Registration QC: mean %.3g m, max |d| %.3g m over %d points",
             report.mean, report.max_abs, report.count)
    return report
