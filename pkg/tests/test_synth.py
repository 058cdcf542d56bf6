"""Unit tests for the synthetic wall, facade and deformation fields."""

import logging
logging.basicConfig(level=logging.WARNING)
logging.captureWarnings(True)

import os
import shutil
import tempfile
import unittest

import numpy as np

from wallscan import exceptions_
from wallscan.cloudcore import PointCloud
from wallscan.refinstr import DepthProfile
from wallscan.synth import (WallSpec, FacadeSpec, DeformationField, gen_wall,
                            gen_facade, deform_wall, inject_outliers,
                            SCENE_DEFAULTS, build_scene, read_scene_file)

log = logging.getLogger(__name__)
log.debug('Beginning tests in {}'.format(__name__))

SMALL = WallSpec(length=0.1, height=0.06, spacing=0.01)


def scene_values(**kw):
    values = dict(SCENE_DEFAULTS)
    values.update(length=0.2, height=0.1, spacing=0.01, amplitude=0., noise=0.)
    values.update(kw)
    return values


class GenWallTests(unittest.TestCase):
    def test_grid(self):
        wall = gen_wall(SMALL)
        self.assertEqual(len(wall), 11 * 7)
        self.assertEqual(wall.frame, PointCloud.FRAME_WALL)
        self.assertAlmostEqual(wall.x.min(), 0.)
        self.assertAlmostEqual(wall.x.max(), 0.1)
        self.assertAlmostEqual(wall.z.max(), 0.06)

    def test_surface(self):
        spec = WallSpec(length=0.3, height=0.3, spacing=0.01, noise=0.)
        wall = gen_wall(spec)
        np.testing.assert_allclose(wall.y, spec.surface(wall.x, wall.z), atol=1e-15)
        self.assertLessEqual(np.abs(wall.y).max(), spec.amplitude + 1e-12)

    def test_deterministic(self):
        a = gen_wall(SMALL)
        b = gen_wall(SMALL)
        np.testing.assert_array_equal(a.points, b.points)

    def test_seed_only_changes_noise(self):
        a = gen_wall(SMALL)
        b = gen_wall(WallSpec(length=0.1, height=0.06, spacing=0.01, seed=7))
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.z, b.z)
        self.assertFalse(np.array_equal(a.y, b.y))

    def test_noise_level(self):
        spec = WallSpec(length=1., height=1., spacing=0.005, amplitude=0., noise=0.002)
        wall = gen_wall(spec)
        self.assertAlmostEqual(np.std(wall.y), 0.002, delta=1e-4)

    def test_invalid(self):
        with self.assertRaises(exceptions_.InvariantError):
            WallSpec(spacing=0.)
        with self.assertRaises(exceptions_.InvariantError):
            WallSpec(noise=-1.)


class GenFacadeTests(unittest.TestCase):
    def test_flat_without_depth(self):
        spec = FacadeSpec(width=1., height=1., spacing=0.05, windows=(2, 2),
                          window_size=(0.2, 0.2), depth=0.)
        facade = gen_facade(spec)
        self.assertEqual(len(facade), 21 * 21)
        np.testing.assert_array_equal(facade.y, 0.)

    def test_recesses(self):
        spec = FacadeSpec(width=1., height=1., spacing=0.02, windows=(2, 2),
                          window_size=(0.2, 0.2), depth=0.1)
        facade = gen_facade(spec)
        self.assertGreater(len(facade), 51 * 51)
        self.assertAlmostEqual(facade.y.min(), -0.1)
        self.assertEqual(len(spec.window_boxes()), 4)
        for x_lo, x_hi, z_lo, z_hi in spec.window_boxes():
            inside = ((facade.x > x_lo) & (facade.x < x_hi)
                      & (facade.z > z_lo) & (facade.z < z_hi))
            np.testing.assert_allclose(facade.y[inside], -0.1)

    def test_side_walls(self):
        spec = FacadeSpec(width=1., height=1., spacing=0.02, windows=(1, 1),
                          window_size=(0.4, 0.4), depth=0.1)
        facade = gen_facade(spec)
        mid = (facade.y < -1e-9) & (facade.y > -0.1 + 1e-9)
        self.assertTrue(mid.any())
        x_lo, x_hi, z_lo, z_hi = spec.window_boxes()[0]
        on_side = (np.isclose(facade.x[mid], x_lo) | np.isclose(facade.x[mid], x_hi)
                   | np.isclose(facade.z[mid], z_lo) | np.isclose(facade.z[mid], z_hi))
        self.assertTrue(on_side.all())

    def test_windows_do_not_fit(self):
        with self.assertRaises(exceptions_.InvariantError):
            FacadeSpec(width=1., windows=(4, 1), window_size=(0.3, 0.3))


class DeformationFieldTests(unittest.TestCase):
    extent = (0., 1., 0., 0.5)

    def test_constant(self):
        f = DeformationField.constant(-0.01, self.extent)
        np.testing.assert_allclose(f([0., 0.3, 1.], [0., 0.2, 0.5]), -0.01)
        self.assertEqual(f.max_magnitude, 0.01)

    def test_ramp(self):
        f = DeformationField.ramp(-0.002, -0.004, 0.001, self.extent)
        x = np.array([0., 0.25, 0.9])
        z = np.array([0.5, 0.1, 0.3])
        np.testing.assert_allclose(f(x, z), -0.002 - 0.004 * x + 0.001 * z, atol=1e-12)

    def test_bump(self):
        f = DeformationField.bump(-0.012, self.extent)
        self.assertAlmostEqual(float(f(0.5, 0.25)), -0.012, places=12)
        np.testing.assert_allclose(f([0., 1., 0.5, 0.5], [0.25, 0.25, 0., 0.5]), 0.,
                                   atol=1e-12)
        self.assertAlmostEqual(f.max_magnitude, 0.012, delta=1e-4)

    def test_negated(self):
        f = DeformationField.ramp(0.001, 0.002, 0., self.extent)
        np.testing.assert_allclose(f.negated()(0.5, 0.1), -f(0.5, 0.1))

    def test_from_profile(self):
        profile = DepthProfile([2., 1., 0.], [0., 0.001, 0.002])
        f = DeformationField.from_profile(profile, 0., (0., 1.))
        self.assertAlmostEqual(float(f(0.4, 0.)), -0.002, places=12)
        self.assertAlmostEqual(float(f(0.4, -1.)), -0.001, places=12)
        self.assertEqual(f.extent, (0., 1., -2., 0.))

    def test_to_map(self):
        f = DeformationField.ramp(0., 0.01, 0., (0., 0.1, 0., 0.06))
        dmap = f.to_map(0.02)
        self.assertEqual(dmap.shape, (3, 5))
        self.assertTrue(dmap.valid.all())
        self.assertEqual(dmap.method, 'truth')
        np.testing.assert_allclose(dmap.values[0], 0.01 * np.array([0.01, 0.03, 0.05,
                                                                     0.07, 0.09]),
                                   atol=1e-12)

    def test_shape_checks(self):
        with self.assertRaises(exceptions_.InvariantError):
            DeformationField([0.], [0., 1.], [[0., 0.]])
        with self.assertRaises(exceptions_.InvariantError):
            DeformationField([0., 1.], [0., 1.], np.zeros((3, 2)))


class DeformWallTests(unittest.TestCase):
    def test_shift(self):
        wall = gen_wall(SMALL)
        f = DeformationField.ramp(-0.005, 0.01, 0., SMALL.extent)
        moved = deform_wall(wall, f)
        np.testing.assert_allclose(moved.y - wall.y, -0.005 + 0.01 * wall.x, atol=1e-12)
        np.testing.assert_array_equal(moved.x, wall.x)
        np.testing.assert_array_equal(moved.z, wall.z)

    def test_extent(self):
        wall = gen_wall(SMALL)
        f = DeformationField.constant(-0.01, (0., 0.05, 0., 0.06))
        with self.assertRaises(exceptions_.FieldExtentError):
            deform_wall(wall, f)

    def test_frame(self):
        cloud = PointCloud([[0.05, 0., 0.03]])
        f = DeformationField.constant(-0.01, SMALL.extent)
        with self.assertRaises(exceptions_.InvariantError):
            deform_wall(cloud, f)


class OutlierTests(unittest.TestCase):
    def test_inject(self):
        wall = gen_wall(SMALL)
        moved, idx = inject_outliers(wall, 0.1, magnitude=0.4, seed=3)
        self.assertEqual(idx.size, int(round(0.1 * len(wall))))
        self.assertEqual(np.unique(idx).size, idx.size)
        np.testing.assert_allclose(moved.y[idx] - wall.y[idx], 0.4)
        rest = np.setdiff1d(np.arange(len(wall)), idx)
        np.testing.assert_array_equal(moved.y[rest], wall.y[rest])


class SceneTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_wall_scene(self):
        scene = build_scene(scene_values(field='constant', field_value=-0.01))
        np.testing.assert_allclose(scene.query.y - scene.reference.y, -0.01, atol=1e-12)
        self.assertIsNone(scene.displacement)
        self.assertIsNone(scene.outliers)

    def test_query_seed(self):
        scene = build_scene(scene_values(noise=0.001, seed=4))
        self.assertFalse(np.array_equal(scene.query.y, scene.reference.y))
        same = build_scene(scene_values(noise=0.001, seed=4, query_seed=4))
        np.testing.assert_array_equal(same.query.y, same.reference.y)

    def test_facade_scene(self):
        values = scene_values(kind='facade', length=1., height=1., spacing=0.05,
                              windows=[2, 2], window_size=[0.2, 0.2], depth=0.05,
                              translation=[0.01, -0.02, 0.])
        scene = build_scene(values)
        np.testing.assert_allclose(scene.query.points - scene.reference.points,
                                   np.tile([0.01, -0.02, 0.], (len(scene.query), 1)),
                                   atol=1e-12)
        self.assertIsNone(scene.field)
        back = scene.displacement.inverse().apply(scene.query.points)
        np.testing.assert_allclose(back, scene.reference.points, atol=1e-12)

    def test_outliers(self):
        scene = build_scene(scene_values(outlier_fraction=0.05))
        self.assertEqual(scene.outliers.size, int(round(0.05 * len(scene.query))))

    def test_unknown_kind(self):
        with self.assertRaises(exceptions_.ConfigError):
            build_scene(scene_values(kind='bridge'))
        with self.assertRaises(exceptions_.ConfigError):
            build_scene(scene_values(field='wave'))

    def test_read_scene_file(self):
        path = os.path.join(self.tmp, 'scene.txt')
        with open(path, 'w') as fh:
            fh.write("# small facade\nkind = facade\nwindows = [2, 1]\nnoise = 0.001\n")
        values = read_scene_file(path)
        self.assertEqual(values['kind'], 'facade')
        self.assertEqual(values['windows'], [2, 1])
        self.assertEqual(values['noise'], 0.001)
        self.assertEqual(values['spacing'], SCENE_DEFAULTS['spacing'])

    def test_scene_file_unknown_key(self):
        path = os.path.join(self.tmp, 'scene.txt')
        with open(path, 'w') as fh:
            fh.write("kind = wall\ncolour = red\n")
        with self.assertRaises(exceptions_.ConfigError):
            read_scene_file(path)


if __name__ == '__main__':
    unittest.main()
