"""Unit tests for the split-half level-of-detection sweep."""

import logging
logging.basicConfig(level=logging.WARNING)
logging.captureWarnings(True)

import os
import shutil
import tempfile
import unittest
from unittest import mock
import warnings

import numpy as np

from wallscan import exceptions_
from wallscan import uncertainty
from wallscan.uncertainty import LodReport, LodRow, LOD_HEADER, mae, lod_sweep
from wallscan.synth import WallSpec, gen_wall

log = logging.getLogger(__name__)
log.debug('Beginning tests in {}'.format(__name__))

FLAT = WallSpec(length=0.6, height=0.4, spacing=0.01, amplitude=0., noise=0.)
NOISY = WallSpec(length=2.0, height=1.2, spacing=0.005, amplitude=0.03,
                 wavelength=0.3, noise=0.0015, seed=3)


def sweep(spec, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        return lod_sweep(gen_wall(spec), progress=False, **kwargs)


class MaeTests(unittest.TestCase):
    def test_zeros(self):
        self.assertEqual(mae([0., 0., 0.]), 0.)

    def test_no_neutralisation(self):
        self.assertAlmostEqual(mae([0.001, -0.001]), 0.001)

    def test_folded_normal(self):
        values = np.random.default_rng(0).normal(0, 0.001, 100000)
        self.assertLess(abs(mae(values) / (0.001 * np.sqrt(2 / np.pi)) - 1), 0.01)

    def test_symmetry_and_scaling(self):
        values = np.random.default_rng(1).normal(0, 1, 50)
        self.assertAlmostEqual(mae(values), mae(-values), places=12)
        self.assertAlmostEqual(mae(2.5 * values), 2.5 * mae(values), places=12)

    def test_nan_skipped(self):
        self.assertAlmostEqual(mae([np.nan, -0.002]), 0.002)

    def test_empty(self):
        with self.assertRaises(exceptions_.EmptyInputError):
            mae([])
        with self.assertRaises(exceptions_.EmptyInputError):
            mae([np.nan])


class LodReportTests(unittest.TestCase):
    def setUp(self):
        self.report = LodReport(initial_spacing=0.005)
        for k, s in enumerate((0.005, 0.01, 0.02, 0.04)):
            self.report.rows.append(LodRow(k, 2 * k * 0.005, s, 'c2m', 0.001 * (k + 1), 10))
            self.report.rows.append(LodRow(k, 2 * k * 0.005, s, 'm3c2', 0.0005 * (k + 1), 10))

    def test_trend(self):
        self.assertAlmostEqual(self.report.trend('c2m'), 1.)
        self.assertTrue(np.isnan(self.report.trend('icp')))

    def test_interpolated_lod(self):
        lod = self.report.minimum_level_of_detection(0.015)
        self.assertAlmostEqual(lod['c2m'], 0.0025)
        self.assertAlmostEqual(lod['m3c2'], 0.00125)

    def test_csv(self):
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, 'lod.csv')
            self.report.to_csv(path)
            with open(path) as fh:
                lines = fh.read().splitlines()
            self.assertEqual(lines[0], LOD_HEADER)
            self.assertEqual(lines[1], '0,0.000000,0.005000,c2m,1.000000,10')
            self.assertEqual(len(lines), 9)
        finally:
            shutil.rmtree(tmpdir)

    def test_summary(self):
        summary = self.report.summary()
        self.assertEqual(summary['levels'], 4)
        self.assertEqual(self.report.methods(), ['c2m', 'm3c2'])


class FlatSweepTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.report = sweep(FLAT, levels=3, seed=5)

    def test_noise_free_plane(self):
        for method in ('c2m', 'm2m', 'm3c2'):
            rows = self.report.rows_for(method)
            self.assertEqual(len(rows), 4)
            for row in rows:
                self.assertGreater(row.count, 0)
                self.assertLess(row.mae, 1e-9)

    def test_levels(self):
        s0 = self.report.initial_spacing
        levels = sorted({r.level for r in self.report.rows})
        self.assertEqual(levels, [0, 1, 2, 3])
        for row in self.report.rows_for('c2m'):
            self.assertAlmostEqual(row.voxel_size, 2 * row.level * s0)
        spacings = [r.spacing for r in self.report.rows_for('c2m')]
        self.assertTrue(np.all(np.diff(spacings) > 0))
        self.assertAlmostEqual(spacings[0], s0)

    def test_deterministic(self):
        again = sweep(FLAT, levels=3, seed=5)
        np.testing.assert_array_equal(again.columns()['mae_mm'],
                                      self.report.columns()['mae_mm'])
        np.testing.assert_array_equal(again.columns()['spacing_m'],
                                      self.report.columns()['spacing_m'])

    def test_invalid_levels(self):
        with self.assertRaises(exceptions_.InvariantError):
            lod_sweep(gen_wall(FLAT), levels=0, progress=False)


class FailingMethodTests(unittest.TestCase):
    def test_failure_is_a_row(self):
        real = uncertainty.run_method

        def flaky(name, *args, **kwargs):
            if name == 'm2m':
                raise exceptions_.DegenerateInputError("no mesh")
            return real(name, *args, **kwargs)

        with mock.patch.object(uncertainty, 'run_method', side_effect=flaky):
            with warnings.catch_warnings(record=True) as w:
                warnings.simplefilter('always')
                report = lod_sweep(gen_wall(FLAT), methods=('c2m', 'm2m'),
                                   levels=1, progress=False)
        failed = report.rows_for('m2m')
        self.assertEqual(len(failed), 2)
        self.assertTrue(all(r.count == 0 and np.isnan(r.mae) for r in failed))
        self.assertTrue(all(r.count > 0 for r in report.rows_for('c2m')))
        self.assertTrue(any('m2m failed' in str(x.message) for x in w))


class NoisyWallSweepTests(unittest.TestCase):
    """Split-half sweep of a rough wall with 1.5 mm range noise."""
    @classmethod
    def setUpClass(cls):
        cls.report = sweep(NOISY, levels=6, seed=0)

    def test_error_grows_with_spacing(self):
        for method in ('c2m', 'm2m', 'm3c2', 'icp'):
            self.assertGreater(self.report.trend(method), 0.9, method)

    def test_method_ordering(self):
        levels = sorted({r.level for r in self.report.rows})
        self.assertEqual(levels, list(range(7)))
        for level in levels:
            rows = {r.method: r.mae for r in self.report.rows
                    if r.level == level and r.count > 0}
            self.assertEqual(len(rows), 4, level)
            self.assertEqual(min(rows, key=rows.get), 'm3c2', level)
            self.assertEqual(max(rows, key=rows.get), 'icp', level)

    def test_every_row_counted(self):
        for row in self.report.rows:
            if row.count > 0:
                self.assertGreaterEqual(row.mae, 0.)


if __name__ == '__main__':
    unittest.main()
