"""Unit tests for the small-angle method and inclinometer profiles."""

import logging
logging.basicConfig(level=logging.WARNING)
logging.captureWarnings(True)

import os
import shutil
import tempfile
import unittest
import warnings

import numpy as np

from wallscan import exceptions_
from wallscan.deform import DeformationMap
from wallscan.refinstr import (RHO, SmallAngleSetup, InclinometerTrace,
                               DepthProfile, small_angle_deformation,
                               small_angle_exact, inclinometer_profile,
                               tilts_from_profile, compare_profile,
                               read_trace_csv, read_profile_csv)
from wallscan.synth import WallSpec, DeformationField, gen_wall, deform_wall
from wallscan.deform import c2m, rasterize

log = logging.getLogger(__name__)
log.debug('Beginning tests in {}'.format(__name__))


class SmallAngleTests(unittest.TestCase):
    def test_zero(self):
        self.assertEqual(small_angle_deformation(0., 80.), 0.)

    def test_benchmark_distance(self):
        d = small_angle_deformation(10., 80.)
        self.assertAlmostEqual(d * 1000., 3.8785, places=4)
        exact = small_angle_exact(10., 80.)
        self.assertLess(abs(d - exact) / exact, 1e-7)

    def test_rho(self):
        self.assertAlmostEqual(RHO, 206264.806, places=3)
        self.assertAlmostEqual(small_angle_deformation(206.2648, 1.) * 1000., 1., places=6)

    def test_setup(self):
        setup = SmallAngleSetup(length=50., beta0=100.)
        self.assertAlmostEqual(setup.deformation(110.), small_angle_deformation(10., 50.))

    def test_bad_length(self):
        with self.assertRaises(exceptions_.InvariantError):
            small_angle_deformation(1., 0.)
        with self.assertRaises(exceptions_.InvariantError):
            SmallAngleSetup(length=-1.)


class InclinometerTests(unittest.TestCase):
    def test_all_zero(self):
        profile = inclinometer_profile(InclinometerTrace.from_readings(np.zeros(45)))
        self.assertEqual(len(profile), 46)
        self.assertEqual(profile.depths[0], 22.5)
        self.assertEqual(profile.depths[-1], 0.)
        np.testing.assert_array_equal(profile.deformation, 0.)

    def test_stated_accuracy(self):
        readings = np.zeros(45)
        readings[10:12] = 0.01
        profile = inclinometer_profile(InclinometerTrace.from_readings(readings))
        self.assertAlmostEqual(profile.deformation[-1] * 1000., 0.1745, places=4)
        self.assertEqual(profile.deformation[10], 0.)

    def test_round_trip(self):
        depths = 10. - 0.5 * np.arange(21)
        curve = 0.02 * np.sin(np.pi * (10. - depths) / 20.) ** 2
        tilts = tilts_from_profile(DepthProfile(depths, curve))
        profile = inclinometer_profile(InclinometerTrace(tilts, 10.))
        np.testing.assert_allclose(profile.deformation, curve, atol=1e-9)
        np.testing.assert_allclose(profile.depths, depths, atol=1e-12)

    def test_wall_y_sign(self):
        profile = DepthProfile([1., 0.], [0., 0.005])
        np.testing.assert_array_equal(profile.wall_y, [0., -0.005])
        self.assertAlmostEqual(profile.at(0.5), 0.0025)

    def test_concatenate(self):
        lower = InclinometerTrace.from_readings([0.1, 0.2])
        upper = InclinometerTrace.from_readings([0.3])
        both = lower.concatenate(upper)
        self.assertEqual(both.tube_depth, 1.5)
        np.testing.assert_array_equal(both.readings, [0.1, 0.2, 0.3])
        np.testing.assert_array_equal(both.depths, [1.5, 1., 0.5])

    def test_invalid_traces(self):
        with self.assertRaises(exceptions_.InvariantError):
            InclinometerTrace([], 0.)
        with self.assertRaises(exceptions_.InvariantError):
            InclinometerTrace([0., 90.], 1.)
        with self.assertRaises(exceptions_.InvariantError):
            InclinometerTrace([0., 0.], 1.5)


class TraceFileTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def write(self, name, text):
        path = os.path.join(self.tmpdir, name)
        with open(path, 'w') as fh:
            fh.write(text)
        return path

    def test_read_trace(self):
        path = self.write('trace.csv', 'depth_m,theta_deg\n1.5,0.1\n1.0,0.2\n0.5,0.0\n')
        trace = read_trace_csv(path)
        self.assertEqual(trace.tube_depth, 1.5)
        np.testing.assert_array_equal(trace.readings, [0.1, 0.2, 0.])

    def test_bad_depths(self):
        path = self.write('trace.csv', 'depth_m,theta_deg\n1.5,0.1\n0.5,0.2\n')
        with self.assertRaises(exceptions_.CloudFormatError):
            read_trace_csv(path)

    def test_non_finite(self):
        path = self.write('trace.csv', 'depth_m,theta_deg\n1.0,0.1\n0.5,nan\n')
        with self.assertRaises(exceptions_.CloudFormatError) as cm:
            read_trace_csv(path)
        self.assertEqual(cm.exception.lineno, 3)

    def test_profile_round_trip(self):
        path = os.path.join(self.tmpdir, 'profile.csv')
        profile = DepthProfile([1., 0.5, 0.], [0., 0.001, 0.0025])
        profile.to_csv(path)
        back = read_profile_csv(path)
        np.testing.assert_allclose(back.depths, profile.depths)
        np.testing.assert_allclose(back.deformation, profile.deformation, atol=1e-9)


class CompareProfileTests(unittest.TestCase):
    def setUp(self):
        depths = 5. - 0.5 * np.arange(11)
        self.profile = DepthProfile(depths, 0.01 * (1. - depths / 5.))
        # Cell centres sit on the profile nodes (ground level 5 m)
        column = self.profile.wall_y
        values = np.tile(column[:, None], (1, 2))
        valid = np.ones_like(values, dtype=bool)
        self.dmap = DeformationMap(0., -0.25, 0.5, values, valid.astype(int), valid, 'M2M')

    def test_exact_map(self):
        result = compare_profile(self.dmap, 0.5, self.profile, 5.)
        self.assertEqual(len(result), 11)
        self.assertTrue(result.valid.all())
        np.testing.assert_allclose(result.differences, 0., atol=1e-15)

    def test_uniform_offset(self):
        self.dmap.values -= 0.002
        result = compare_profile(self.dmap, 0.5, self.profile, 5.)
        np.testing.assert_allclose(result.differences_mm(), -2., atol=1e-9)

    def test_invalid_cells_flagged(self):
        self.dmap.valid[3, :] = False
        result = compare_profile(self.dmap, 0.5, self.profile, 5.)
        self.assertEqual(int((~result.valid).sum()), 1)
        self.assertEqual(result.summary()['valid'], 10)

    def test_no_overlap(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter('always')
            result = compare_profile(self.dmap, 7., self.profile, 5.)
        self.assertEqual(len(result), 0)
        self.assertTrue(len(w) >= 1)

    def test_scanned_wall_matches_inclinometer(self):
        depths = 1.5 - 0.5 * np.arange(4)
        curve = 0.008 * (1. - depths / 1.5) ** 2
        profile = inclinometer_profile(InclinometerTrace(
            tilts_from_profile(DepthProfile(depths, curve)), 1.5))
        spec = WallSpec(length=0.4, height=1.5, spacing=0.005, amplitude=0.,
                        noise=0.0015)
        field = DeformationField.from_profile(profile, 1.5, (0., 0.4))
        reference = gen_wall(spec)
        query = deform_wall(gen_wall(WallSpec(length=0.4, height=1.5, spacing=0.005,
                                              amplitude=0., noise=0.0015, seed=1)),
                            field)
        dmap = rasterize(c2m(query, reference), 0.02)
        result = compare_profile(dmap, 0.21, profile, 1.5)
        self.assertGreaterEqual(result.valid.sum(), 3)
        self.assertLess(result.summary()['mean_abs_difference_mm'], 1.)


if __name__ == '__main__':
    unittest.main()
