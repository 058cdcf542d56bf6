"""Unit tests for the deformation estimators and maps."""

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
from wallscan.cloudcore import PointCloud, Plane
from wallscan.deform import (M3C2Params, PointwiseDeformation, DeformationMap,
                             c2m, m2m, m3c2, icp_deform, filter_range,
                             rasterize, run_method, read_map_csv, MAP_HEADER)
from wallscan.synth import WallSpec, DeformationField, gen_wall, deform_wall

log = logging.getLogger(__name__)
log.debug('Beginning tests in {}'.format(__name__))

PLANE = WallSpec(length=0.6, height=0.4, spacing=0.01, amplitude=0., noise=0.)
M3C2_PARAMS = M3C2Params(0.04, 0.04, 0.2)


def shifted(cloud, dy):
    pts = np.array(cloud.points)
    pts[:, 1] += dy
    return cloud.with_points(pts)


def pointwise(values, positions=None):
    values = np.asarray(values, dtype=float)
    if positions is None:
        positions = np.column_stack([np.arange(values.size), np.zeros((values.size, 2))])
    n = values.size
    return PointwiseDeformation(np.asarray(positions, dtype=float), values,
                                np.ones(n, dtype=bool), np.full(n, '', dtype='<U20'),
                                'C2M')


def cell_errors(field, dmap, cell_size):
    truth = field.to_map(cell_size)
    xs, zs = truth.cell_centres()
    est = np.array([dmap.value_at(x, z) for x, z in zip(xs.ravel(), zs.ravel())])
    ok = np.isfinite(est)
    return np.abs(est[ok] - truth.values.ravel()[ok]), ok.mean()


def mae_against(field, dmap, cell_size):
    errors, coverage = cell_errors(field, dmap, cell_size)
    return errors.mean(), coverage


class PlaneOffsetTests(unittest.TestCase):
    """A plane moved 10 mm toward the pit."""
    @classmethod
    def setUpClass(cls):
        cls.reference = gen_wall(PLANE)
        cls.query = shifted(cls.reference, -0.010)

    def test_c2m(self):
        d = c2m(self.query, self.reference)
        self.assertTrue(d.valid.all())
        np.testing.assert_allclose(d.values, -0.010, atol=1e-9)
        self.assertEqual(d.method, 'C2M')

    def test_m2m(self):
        dmap = m2m(self.reference, self.query)
        self.assertGreater(dmap.valid.sum(), 0)
        np.testing.assert_allclose(dmap.values[dmap.valid], -0.010, atol=1e-9)
        self.assertEqual(dmap.method, 'M2M')

    def test_m3c2(self):
        d = m3c2(self.reference, self.query, M3C2_PARAMS)
        self.assertTrue(d.valid.all())
        np.testing.assert_allclose(d.values, -0.010, atol=1e-9)

    def test_icp(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            d = icp_deform(self.reference, self.query)
        self.assertGreater(d.valid.mean(), 0.5)
        np.testing.assert_allclose(d.values[d.valid], -0.010, atol=1e-9)
        self.assertIsNotNone(d.registration)

    def test_identical_clouds(self):
        np.testing.assert_allclose(c2m(self.reference, self.reference).values, 0.,
                                   atol=1e-12)
        dmap = m2m(self.reference, self.reference)
        np.testing.assert_allclose(dmap.values[dmap.valid], 0., atol=1e-12)
        np.testing.assert_allclose(
            m3c2(self.reference, self.reference, M3C2_PARAMS).values, 0., atol=1e-12)

    def test_run_method(self):
        for name in ('c2m', 'M3C2'):
            d = run_method(name, self.reference, self.query, m3c2_params=M3C2_PARAMS)
            np.testing.assert_allclose(d.valid_values(), -0.010, atol=1e-9)
        self.assertIsInstance(run_method('m2m', self.reference, self.query),
                              DeformationMap)
        with self.assertRaises(exceptions_.ConfigError):
            run_method('c2c', self.reference, self.query)


class C2MTests(unittest.TestCase):
    def test_out_of_footprint(self):
        reference = gen_wall(PLANE)
        query = PointCloud([[0.3, -0.003, 0.2], [1.5, 0., 0.2]])
        d = c2m(query, reference)
        self.assertAlmostEqual(d.values[0], -0.003, places=12)
        self.assertEqual(list(d.valid), [True, False])
        self.assertEqual(d.reasons[1], d.OUT_OF_FOOTPRINT)
        self.assertAlmostEqual(abs(d.values[1]), 0.9, places=9)

    def test_normal_and_closest_modes(self):
        reference = gen_wall(WallSpec(length=0.6, height=0.6, spacing=0.01, noise=0.))
        query = shifted(reference, -0.010)
        plane = Plane([0., 1., 0.])
        along = c2m(query, reference, plane=plane)
        self.assertTrue(along.valid.all())
        np.testing.assert_allclose(along.values, -0.010, atol=1e-9)
        closest = c2m(query, reference, plane=plane, mode='closest')
        self.assertTrue(np.all(np.abs(closest.values) <= 0.010 + 1e-9))
        self.assertLess(np.abs(closest.values).min(), 0.009)

    def test_unknown_mode(self):
        reference = gen_wall(PLANE)
        with self.assertRaises(exceptions_.ConfigError):
            c2m(reference, reference, mode='vertical')


class FullScaleOffsetTests(unittest.TestCase):
    """4 m x 2 m planar wall at 5 mm spacing with 1.5 mm noise, moved
    10 mm toward the pit between scans."""
    @classmethod
    def setUpClass(cls):
        spec = dict(length=4., height=2., spacing=0.005, amplitude=0., noise=0.0015)
        cls.reference = gen_wall(WallSpec(seed=0, **spec))
        cls.query = shifted(gen_wall(WallSpec(seed=1, **spec)), -0.010)

    def assertMeanOffset(self, values, tol):
        self.assertLess(abs(np.mean(values) + 0.010), tol)

    def test_c2m(self):
        d = c2m(self.query, self.reference)
        self.assertGreater(d.valid.mean(), 0.99)
        self.assertMeanOffset(d.valid_values(), 3e-4)

    def test_m2m(self):
        dmap = m2m(self.reference, self.query)
        self.assertMeanOffset(dmap.valid_values(), 3e-4)

    def test_m3c2(self):
        d = m3c2(self.reference, self.query)
        self.assertGreater(d.valid.mean(), 0.99)
        self.assertMeanOffset(d.valid_values(), 3e-4)

    def test_icp(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            d = icp_deform(self.reference, self.query)
        self.assertMeanOffset(d.valid_values(), 1e-3)


class FieldRecoveryTests(unittest.TestCase):
    """Wavy wall (30 mm amplitude, 0.3 m wavelength, 1.5 mm noise) under
    a bump reaching 12 mm toward the pit."""
    @classmethod
    def setUpClass(cls):
        spec = WallSpec(length=0.6, height=0.6, spacing=0.005, amplitude=0.03,
                        wavelength=0.3, noise=0.0015, seed=0)
        cls.reference = gen_wall(spec)
        cls.field = DeformationField.bump(-0.012, spec.extent)
        cls.query = deform_wall(gen_wall(WallSpec(length=0.6, height=0.6,
                                                  spacing=0.005, amplitude=0.03,
                                                  wavelength=0.3, noise=0.0015,
                                                  seed=1)), cls.field)

    def test_c2m(self):
        dmap = rasterize(c2m(self.query, self.reference), 0.02)
        err, coverage = mae_against(self.field, dmap, 0.02)
        self.assertGreater(coverage, 0.95)
        self.assertLess(err, 0.0015)

    def test_m3c2(self):
        d = m3c2(self.reference, self.query, M3C2Params(0.03, 0.03, 4.))
        err, coverage = mae_against(self.field, rasterize(d, 0.02), 0.02)
        self.assertGreater(coverage, 0.95)
        self.assertLess(err, 0.001)

    def test_m3c2_wall_y(self):
        d = m3c2(self.reference, self.query, M3C2Params(0.03, 0.03, 4., wall_y=True))
        errors, coverage = cell_errors(self.field, rasterize(d, 0.02), 0.02)
        self.assertGreater(coverage, 0.95)
        self.assertGreaterEqual(np.mean(errors <= 0.001), 0.95)


class M2MTests(unittest.TestCase):
    def test_linear_ramp(self):
        spec = WallSpec(length=4., height=0.5, spacing=0.02, amplitude=0., noise=0.)
        reference = gen_wall(spec)
        field = DeformationField.ramp(0., -0.001, 0., spec.extent)
        query = deform_wall(reference, field)
        dmap = m2m(reference, query, 0.02)
        x, _ = dmap.cell_centres()
        np.testing.assert_allclose(dmap.values[dmap.valid], -0.001 * x[dmap.valid],
                                   atol=1e-4)

    def test_grid_is_aligned(self):
        reference = gen_wall(WallSpec(length=0.5, height=0.5, spacing=0.01,
                                      amplitude=0., noise=0., x0=0.013, z0=0.027))
        dmap = m2m(reference, reference, 0.02)
        self.assertAlmostEqual(dmap.x0 / 0.02, round(dmap.x0 / 0.02), places=9)
        self.assertAlmostEqual(dmap.z0 / 0.02, round(dmap.z0 / 0.02), places=9)

    def test_invalid_cell_size(self):
        reference = gen_wall(PLANE)
        with self.assertRaises(exceptions_.InvariantError):
            m2m(reference, reference, 0.)
        with self.assertRaises(exceptions_.InvariantError):
            m2m(reference, reference, 0.02, samples=0)

    def test_cell_sub_samples(self):
        reference = gen_wall(PLANE)
        query = shifted(reference, -0.010)
        dmap = m2m(reference, query, 0.02)
        self.assertEqual(dmap.counts.max(), 4)
        self.assertEqual(dmap.counts[1:-1, 1:-1].min(), 4)
        centres = m2m(reference, query, 0.02, samples=1)
        self.assertEqual(centres.counts.max(), 1)
        np.testing.assert_allclose(centres.valid_values(), -0.010, atol=1e-9)

    def test_averaging_lowers_noise(self):
        spec = dict(length=0.6, height=0.6, spacing=0.005, amplitude=0., noise=0.0015)
        reference = gen_wall(WallSpec(seed=0, **spec))
        query = gen_wall(WallSpec(seed=1, **spec))
        spread = [np.std(m2m(reference, query, 0.02, samples=s).valid_values())
                  for s in (1, 2)]
        self.assertLess(spread[1], spread[0])


class IcpDeformTests(unittest.TestCase):
    def test_pairs_across_wall_face(self):
        spec = dict(length=0.4, height=0.3, spacing=0.005, amplitude=0.03,
                    wavelength=0.3, noise=0.0015)
        reference = gen_wall(WallSpec(seed=0, **spec))
        query = shifted(gen_wall(WallSpec(seed=1, **spec)), -0.010)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            d = icp_deform(reference, query)
        self.assertTrue(d.valid.all())
        np.testing.assert_allclose(d.values, query.y - reference.y, atol=1e-12)

    def test_no_correspondence_off_the_face(self):
        reference = gen_wall(PLANE)
        query = shifted(reference, -0.010)
        query = query.subset(np.flatnonzero(query.x > 0.2))
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            d = icp_deform(reference.subset(np.flatnonzero(reference.x < 0.4)), query)
        far = d.positions[:, 0] > 0.45
        self.assertTrue(far.any())
        self.assertFalse(d.valid[far].any())
        self.assertTrue(np.all(d.reasons[far] == d.NO_CORRESPONDENCE))


class M3C2Tests(unittest.TestCase):
    def setUp(self):
        self.reference = gen_wall(PLANE)
        self.query = shifted(self.reference, -0.010)

    def test_empty_cylinder(self):
        keep = np.flatnonzero(self.query.x < 0.3)
        d = m3c2(self.reference, self.query.subset(keep), M3C2_PARAMS)
        far = d.positions[:, 0] > 0.35
        self.assertFalse(d.valid[far].any())
        self.assertTrue(np.all(d.reasons[far] == d.EMPTY_CYLINDER))
        self.assertTrue(np.all(np.isnan(d.values[far])))

    def test_resolution_subset(self):
        full = m3c2(self.reference, self.query, M3C2_PARAMS)
        params = M3C2Params(0.04, 0.04, 0.2, resolution=0.03)
        sparse = m3c2(self.reference, self.query, params)
        self.assertLess(len(sparse), len(full))
        lookup = {tuple(p): i for i, p in enumerate(full.positions)}
        idx = [lookup[tuple(p)] for p in sparse.positions]
        np.testing.assert_allclose(sparse.values, full.values[idx], atol=1e-12)

    def test_noisy_planes(self):
        rng = np.random.default_rng(0)
        ref = np.array(self.reference.points)
        qry = np.array(self.query.points)
        ref[:, 1] += rng.normal(0, 0.0015, len(ref))
        qry[:, 1] += rng.normal(0, 0.0015, len(qry))
        d = m3c2(PointCloud(ref), PointCloud(qry), M3C2Params(0.08, 0.08, 0.2))
        self.assertLess(abs(d.valid_values().mean() + 0.010), 1e-4)

    def test_params(self):
        params = M3C2Params.for_spacing(0.005)
        self.assertAlmostEqual(params.normal_diameter, 0.02)
        self.assertAlmostEqual(params.projection_diameter, 0.02)
        self.assertEqual(M3C2Params().height, 4.)
        with self.assertRaises(exceptions_.InvariantError):
            M3C2Params(normal_diameter=0.)
        with self.assertRaises(exceptions_.InvariantError):
            M3C2Params(resolution=-1.)


class FilterRangeTests(unittest.TestCase):
    def test_boundaries(self):
        d = filter_range(pointwise([-0.016, -0.010, 0.001]))
        self.assertEqual(list(d.valid), [False, True, False])
        self.assertEqual(list(d.reasons), ['out-of-range', '', 'out-of-range'])
        np.testing.assert_array_equal(d.values, [-0.016, -0.010, 0.001])

    def test_soil_loss_artifact(self):
        d = filter_range(pointwise([0.4, -0.005]))
        self.assertEqual(list(d.valid), [False, True])

    def test_all_in_range(self):
        original = pointwise([-0.015, -0.007, 0.])
        d = filter_range(original)
        self.assertTrue(d.valid.all())
        self.assertEqual(d.valid.sum() + (~d.valid).sum(), len(original))

    def test_injected_outliers(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(-0.02, 0.005, 1000)
        values[rng.choice(1000, 50, replace=False)] = rng.uniform(0.1, 0.4, 50)
        original = pointwise(values)
        d = filter_range(original)
        kept = d.values[d.valid]
        self.assertTrue(np.all((kept >= -0.015) & (kept <= 0.)))
        inside = (values >= -0.015) & (values <= 0.)
        np.testing.assert_array_equal(d.valid, inside)
        np.testing.assert_array_equal(d.values, values)

    def test_empty_range(self):
        with self.assertRaises(exceptions_.InvariantError):
            filter_range(pointwise([0.]), lo=0.01, hi=0.)

    def test_map(self):
        dmap = DeformationMap(0., 0., 0.02, np.array([[-0.02, -0.01]]),
                              np.ones((1, 2), dtype=int), np.ones((1, 2), dtype=bool),
                              'M2M')
        filtered = filter_range(dmap)
        self.assertEqual(filtered.valid.tolist(), [[False, True]])
        self.assertEqual(filtered.summary()['valid_cells'], 1)


class RasterizeTests(unittest.TestCase):
    def test_mean_of_cell(self):
        d = pointwise([-0.004, -0.006], [[0.005, 0, 0.005], [0.015, 0, 0.012]])
        dmap = rasterize(d, 0.02)
        self.assertEqual(dmap.shape, (1, 1))
        self.assertAlmostEqual(dmap.values[0, 0], -0.005, places=12)
        self.assertEqual(dmap.counts[0, 0], 2)

    def test_one_point_per_cell(self):
        pos = [[0.01, 0, 0.01], [0.03, 0, 0.01], [0.01, 0, 0.03]]
        dmap = rasterize(pointwise([1., 2., 3.], pos), 0.02)
        self.assertEqual(dmap.value_at(0.01, 0.01), 1.)
        self.assertEqual(dmap.value_at(0.03, 0.01), 2.)
        self.assertEqual(dmap.value_at(0.01, 0.03), 3.)
        self.assertTrue(np.isnan(dmap.value_at(0.03, 0.03)))

    def test_invalid_points_ignored(self):
        d = pointwise([-0.004, 1.], [[0.005, 0, 0.005], [0.006, 0, 0.006]])
        d.valid[1] = False
        dmap = rasterize(d, 0.02)
        self.assertAlmostEqual(dmap.values[0, 0], -0.004)
        self.assertEqual(dmap.counts[0, 0], 1)

    def test_dense_field(self):
        spec = WallSpec(length=0.4, height=0.4, spacing=0.002, amplitude=0., noise=0.)
        field = DeformationField.bump(-0.01, spec.extent)
        wall = gen_wall(spec)
        d = pointwise(field(wall.x, wall.z), wall.points)
        err, coverage = mae_against(field, rasterize(d, 0.02), 0.02)
        self.assertEqual(coverage, 1.)
        self.assertLess(err, 0.0005)


class MapFileTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.path = os.path.join(self.tmpdir, 'map.csv')

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_csv(self):
        values = np.array([[-0.0123, np.nan], [0.001, -0.002]])
        valid = np.isfinite(values)
        dmap = DeformationMap(0.04, 0.02, 0.02, values, valid.astype(int), valid, 'M2M')
        dmap.to_csv(self.path)
        with open(self.path) as fh:
            lines = fh.read().splitlines()
        self.assertEqual(lines[0], MAP_HEADER)
        self.assertEqual(lines[1], '0.050000,0.030000,-12.300,1,1')
        self.assertEqual(len(lines), 5)
        back = read_map_csv(self.path, 'M2M')
        self.assertAlmostEqual(back.x0, 0.04, places=9)
        self.assertAlmostEqual(back.cell_size, 0.02, places=9)
        np.testing.assert_array_equal(back.valid, valid)
        np.testing.assert_allclose(back.values[valid], values[valid], atol=1e-6)

    def test_bad_header(self):
        with open(self.path, 'w') as fh:
            fh.write('a,b\n1,2\n')
        with self.assertRaises(exceptions_.CloudFormatError):
            read_map_csv(self.path)


if __name__ == '__main__':
    unittest.main()
