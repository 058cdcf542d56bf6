# -*- coding: utf-8 -*-

"""Minimum level of detection from split-half self comparison.

LodReport
  Table of mean absolute errors per data spacing and method.

A scan is split into two halves that share no points. Since both
halves see the same, unmoved surface, every deformation estimated
between them is error. Both halves are thinned with random-in-voxel
subsampling at growing voxel sizes to show how that error grows with
data spacing.

"""

import logging
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import stats
import tqdm

from . import exceptions_
from .cloudcore import data_spacing
from .deform import (METHODS, DEFAULT_CELL_SIZE, M3C2Params, run_method)
from .registration import IcpParams
from .spatial import split_half, random_in_voxel
from .report import atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['LodRow', 'LodReport', 'mae', 'spearman', 'lod_sweep']

log = logging.getLogger(__name__)

LodRow = namedtuple('LodRow', ('level', 'voxel_size', 'spacing', 'method',
                               'mae', 'count'))
LOD_HEADER = 'level,voxel_size_m,spacing_m,method,mae_mm,count'
STEP_RULE = 'voxel size = 2 * level * initial spacing'
# Estimator failures that only invalidate one row of a sweep
RECOVERABLE = (exceptions_.DegenerateInputError, exceptions_.EmptyInputError,
               exceptions_.RegistrationError, np.linalg.LinAlgError)


def mae(values):
    """Mean absolute value of the valid entries of ``values``.

    ``values`` may be an array (nan entries are skipped), a
    :py:class:`~wallscan.deform.PointwiseDeformation` or a
    :py:class:`~wallscan.deform.DeformationMap`.

    """
    if hasattr(values, 'valid'):
        v = np.asarray(values.values)[np.asarray(values.valid)]
    else:
        v = np.asarray(values, dtype=float).ravel()
        v = v[np.isfinite(v)]
    if v.size == 0:
        raise exceptions_.EmptyInputError("MAE of an empty set of values")
    return float(np.mean(np.abs(v)))


def spearman(x, y):
    """Spearman rank correlation of ``x`` and ``y`` (ties averaged)."""
    rho, _ = stats.spearmanr(x, y)
    return float(rho)


@dataclass
class LodReport(object):
    """Rows of the spacing sweep, ordered by level then method.

    Rows whose estimator failed carry a nan MAE and a count of 0.

    """
    rows: List[LodRow] = field(default_factory=list)
    initial_spacing: float = float('nan')
    step_rule: str = STEP_RULE

    def methods(self):
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def rows_for(self, method):
        return [r for r in self.rows if r.method == method]

    def valid_rows(self):
        return [r for r in self.rows if r.count > 0]

    def columns(self):
        return {
            'level': np.array([r.level for r in self.rows], dtype=int),
            'voxel_size_m': np.array([r.voxel_size for r in self.rows]),
            'spacing_m': np.array([r.spacing for r in self.rows]),
            'method': np.array([r.method for r in self.rows]),
            'mae_mm': np.array([r.mae * 1000. for r in self.rows]),
            'count': np.array([r.count for r in self.rows], dtype=int),
        }

    def trend(self, method):
        """Spearman correlation between spacing and MAE for one
        method."""
        rows = [r for r in self.rows_for(method) if r.count > 0]
        if len(rows) < 3:
            return float('nan')
        return spearman([r.spacing for r in rows], [r.mae for r in rows])

    def minimum_level_of_detection(self, spacing):
        """MAE of each method interpolated at ``spacing`` metres."""
        out = {}
        for method in self.methods():
            rows = sorted((r for r in self.rows_for(method) if r.count > 0),
                          key=lambda r: r.spacing)
            if rows:
                out[method] = float(np.interp(spacing, [r.spacing for r in rows],
                                              [r.mae for r in rows]))
        return out

    def to_csv(self, path):
        table = np.array([(r.level, r.voxel_size, r.spacing, r.method,
                           r.mae * 1000., r.count) for r in self.rows],
                         dtype=object).reshape(-1, 6)
        with atomic_write(path) as fh:
            np.savetxt(fh, table, fmt=['%d', '%.6f', '%.6f', '%s', '%.6f', '%d'],
                       delimiter=',', header=LOD_HEADER, comments='')
        log.info("Wrote LoD report %s (%d rows)", path, len(self.rows))

    def summary(self):
        return {
            'initial_spacing_m': self.initial_spacing,
            'step_rule': self.step_rule,
            'levels': len({r.level for r in self.rows}),
            'trend': {m: self.trend(m) for m in self.methods()},
        }


def _run_level(level, ref, qry, voxel, methods, cell_size, height):
    spacing = 0.5 * (data_spacing(ref) + data_spacing(qry))
    rows = []
    for method in methods:
        try:
            result = run_method(
                method, ref, qry, cell_size=cell_size,
                m3c2_params=M3C2Params.for_spacing(spacing, height=height),
                icp_params=IcpParams(normal_radius=2. * spacing))
            error = mae(result)
            count = int(np.asarray(result.valid).sum())
        except RECOVERABLE as e:
            msg = "LoD level {} method {} failed: {}".format(level, method, e)
            warnings.warn(msg, RuntimeWarning)
            log.warning(msg)
            error, count = float('nan'), 0
        log.info("LoD level %d (S=%.4f m) %s: MAE %.4f mm over %d values",
                 level, spacing, method, error * 1000, count)
        rows.append(LodRow(level, voxel, spacing, method, error, count))
    return rows


def lod_sweep(cloud, methods=METHODS, levels=6, seed=0,
              cell_size=DEFAULT_CELL_SIZE, height=4., progress=True):
    """Split-half spacing sweep of the deformation error.

    Parameters
    ----------
    cloud : PointCloud
      A single scan in the wall frame.
    methods : sequence of str
      Estimators to run, from :py:data:`wallscan.deform.METHODS`.
    levels : int
      Number of subsampling levels after the unsubsampled level 0.
      Level ``k`` uses voxels of ``2 * k`` times the initial spacing.
    seed : int
      Seed for the split and for every level's subsampling.

    Returns
    -------
    LodReport

    """
    if levels < 1:
        raise exceptions_.InvariantError(
            "Sweep needs at least 1 level, got {}".format(levels))
    methods = [m.lower() for m in methods]
    root = np.random.SeedSequence(seed)
    split_seed, *level_seeds = root.spawn(levels + 1)
    ref_half, qry_half = split_half(cloud, int(split_seed.generate_state(1)[0]))
    s0 = 0.5 * (data_spacing(ref_half) + data_spacing(qry_half))
    log.info("LoD sweep on %r: %d + %d points, initial spacing %.4f m",
             cloud.source, len(ref_half), len(qry_half), s0)
    report = LodReport(initial_spacing=s0)
    report.rows.extend(_run_level(0, ref_half, qry_half, 0., methods,
                                  cell_size, height))
    steps = range(1, levels + 1)
    if progress:
        steps = tqdm.tqdm(steps, desc='LoD levels', unit='level')
    for k in steps:
        voxel = 2. * k * s0
        ref_seed, qry_seed = level_seeds[k - 1].generate_state(2)
        ref = random_in_voxel(ref_half, voxel, int(ref_seed))
        qry = random_in_voxel(qry_half, voxel, int(qry_seed))
        try:
            rows = _run_level(k, ref, qry, voxel, methods, cell_size, height)
        except RECOVERABLE as e:
            msg = "LoD level {} skipped: {}".format(k, e)
            warnings.warn(msg, RuntimeWarning)
            log.warning(msg)
            rows = [LodRow(k, voxel, float('nan'), m, float('nan'), 0)
                    for m in methods]
        report.rows.extend(rows)
    return report
