# -*- coding: utf-8 -*-

"""Reference instruments used to check laser-scanning results.

SmallAngleSetup
  Total-station geometry for the small-angle method.
InclinometerTrace
  Tilt readings taken every 0.5 m along an inclinometer tube.
DepthProfile
  Lateral deformation against depth below ground.
ProfileComparison
  Differences between a deformation map column and a depth profile.

Depths are positive metres below ground level. Inclinometer tilts
and profile deformations are positive toward the pit, which is
negative y in the wall frame.

"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import exceptions_
from .report import atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['RHO', 'SmallAngleSetup', 'InclinometerTrace', 'DepthProfile',
           'ProfileComparison', 'small_angle_deformation', 'small_angle_exact',
           'inclinometer_profile', 'tilts_from_profile', 'compare_profile',
           'read_trace_csv', 'read_profile_csv']

log = logging.getLogger(__name__)

# Arcseconds per radian
RHO = 648000. / np.pi
INTERVAL = 0.5
TRACE_HEADER = 'depth_m,theta_deg'
PROFILE_HEADER = 'depth_m,deformation_mm'
COMPARE_HEADER = 'depth_m,z_m,map_mm,profile_mm,difference_mm,valid'


def small_angle_deformation(delta_beta, length):
    """Lateral deformation (metres) seen by a total station.

    Parameters
    ----------
    delta_beta : float
      Change of the observed angle, arcseconds.
    length : float
      Sight length from station to target, metres.

    """
    if not length > 0:
        raise exceptions_.InvariantError(
            "Sight length must be positive, got {}".format(length))
    return delta_beta / RHO * length


def small_angle_exact(delta_beta, length):
    """Deformation without the small-angle approximation."""
    if not length > 0:
        raise exceptions_.InvariantError(
            "Sight length must be positive, got {}".format(length))
    return length * np.tan(delta_beta / RHO)


@dataclass(frozen=True)
class SmallAngleSetup(object):
    """Sight length (m) and baseline angle (arcseconds) of a
    monitored target."""
    length: float
    beta0: float = 0.

    def __post_init__(self):
        if not self.length > 0:
            raise exceptions_.InvariantError(
                "Sight length must be positive, got {}".format(self.length))

    def deformation(self, beta):
        return small_angle_deformation(beta - self.beta0, self.length)


@dataclass(frozen=True, eq=False)
class InclinometerTrace(object):
    """Tilt readings (degrees) ordered from the bottom of the tube up.

    Reading ``i`` covers the interval whose lower end lies
    ``tube_depth - i * interval`` below ground.

    """
    readings: np.ndarray
    tube_depth: float
    interval: float = INTERVAL

    def __post_init__(self):
        theta = np.array(self.readings, dtype=float).reshape(-1)
        if theta.size == 0:
            raise exceptions_.InvariantError("Inclinometer trace has no readings")
        if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) >= 90.):
            raise exceptions_.InvariantError(
                "Inclinometer tilts must be finite and within (-90, 90) degrees")
        if not self.interval > 0:
            raise exceptions_.InvariantError(
                "Reading interval must be positive, got {}".format(self.interval))
        if abs(theta.size * self.interval - self.tube_depth) > 1e-9:
            msg = "{} readings every {} m do not span a {} m tube".format(
                theta.size, self.interval, self.tube_depth)
            raise exceptions_.InvariantError(msg)
        theta.setflags(write=False)
        object.__setattr__(self, 'readings', theta)

    def __len__(self):
        return self.readings.size

    @classmethod
    def from_readings(cls, readings, interval=INTERVAL):
        return cls(readings, len(readings) * interval, interval)

    @property
    def depths(self):
        """Depth of the lower end of each reading's interval."""
        return self.tube_depth - np.arange(len(self)) * self.interval

    def concatenate(self, upper):
        """This trace with ``upper`` stacked on top of it."""
        return InclinometerTrace.from_readings(
            np.concatenate([self.readings, upper.readings]), self.interval)


@dataclass(frozen=True, eq=False)
class DepthProfile(object):
    """Lateral deformation (metres, positive toward the pit) at depths
    (metres below ground) from the tube bottom up to the surface."""
    depths: np.ndarray
    deformation: np.ndarray

    def __post_init__(self):
        d = np.array(self.depths, dtype=float).reshape(-1)
        v = np.array(self.deformation, dtype=float).reshape(-1)
        if d.size != v.size or d.size == 0:
            raise exceptions_.InvariantError("Depth profile arrays differ in size")
        if d.size > 1 and not (np.all(np.diff(d) < 0) or np.all(np.diff(d) > 0)):
            raise exceptions_.InvariantError("Profile depths must be strictly ordered")
        object.__setattr__(self, 'depths', d)
        object.__setattr__(self, 'deformation', v)

    def __len__(self):
        return self.depths.size

    @property
    def wall_y(self):
        """Deformation in wall-frame y (negative toward the pit)."""
        return -self.deformation

    def at(self, depth):
        order = np.argsort(self.depths)
        return np.interp(depth, self.depths[order], self.deformation[order])

    def to_csv(self, path):
        table = np.column_stack([self.depths, self.deformation * 1000.])
        with atomic_write(path) as fh:
            np.savetxt(fh, table, fmt=['%.3f', '%.6f'], delimiter=',',
                       header=PROFILE_HEADER, comments='')
        log.info("Wrote depth profile %s", path)


def inclinometer_profile(trace):
    """Accumulate ``interval * sin(theta)`` from the fixed tube bottom
    upward.

    The first node is the tube bottom with zero deformation; the last
    is the ground surface.

    """
    increments = trace.interval * np.sin(np.radians(trace.readings))
    deformation = np.concatenate([[0.], np.cumsum(increments)])
    depths = trace.tube_depth - np.arange(len(trace) + 1) * trace.interval
    # Keep the surface node exactly at zero depth
    depths[-1] = 0.
    log.debug("Inclinometer profile: surface deformation %.4g m", deformation[-1])
    return DepthProfile(depths, deformation)


def tilts_from_profile(profile, interval=INTERVAL):
    """Tilt readings (degrees) that reproduce ``profile``. Nodes must
    run from the bottom up at ``interval`` spacing."""
    steps = np.diff(profile.deformation) / interval
    if np.any(np.abs(steps) > 1):
        raise exceptions_.InvariantError(
            "Profile increments exceed the reading interval")
    return np.degrees(np.arcsin(steps))


def _read_table(path, header):
    try:
        data = np.genfromtxt(path, delimiter=',', names=True, ndmin=1)
    except (ValueError, OSError) as e:
        raise exceptions_.CloudFormatError(str(e), path=path)
    if tuple(data.dtype.names or ()) != tuple(header.split(',')):
        raise exceptions_.CloudFormatError(
            "expected header {!r}".format(header), path=path, lineno=1)
    for name in data.dtype.names:
        bad = np.flatnonzero(~np.isfinite(data[name]))
        if bad.size:
            raise exceptions_.CloudFormatError(
                "non-finite {}".format(name), path=path, lineno=int(bad[0]) + 2)
    return data


def read_trace_csv(path, interval=INTERVAL):
    """Read an inclinometer trace ``depth_m,theta_deg``, deepest row
    first and the top row at ``interval``."""
    data = _read_table(path, TRACE_HEADER)
    depths = data['depth_m']
    expected = depths[0] - np.arange(depths.size) * interval
    if np.any(np.abs(depths - expected) > 1e-6) or abs(depths[-1] - interval) > 1e-6:
        msg = "depths must fall by {} m per row down to {} m".format(interval, interval)
        raise exceptions_.CloudFormatError(msg, path=path)
    try:
        return InclinometerTrace(data['theta_deg'], float(depths[0]), interval)
    except exceptions_.InvariantError as e:
        raise exceptions_.CloudFormatError(str(e), path=path)


def read_profile_csv(path):
    data = _read_table(path, PROFILE_HEADER)
    return DepthProfile(data['depth_m'], data['deformation_mm'] / 1000.)


@dataclass(eq=False)
class ProfileComparison(object):
    """Per-depth comparison; values in metres, nan where the map has
    no valid cell."""
    depths: np.ndarray
    z: np.ndarray
    map_values: np.ndarray
    profile_values: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return self.depths.size

    @property
    def differences(self):
        return self.map_values - self.profile_values

    def differences_mm(self):
        return np.where(self.valid, self.differences * 1000., np.nan)

    def summary(self):
        d = self.differences[self.valid] * 1000.
        return {
            'depths': int(len(self)),
            'valid': int(self.valid.sum()),
            'mean_abs_difference_mm': float(np.abs(d).mean()) if d.size else float('nan'),
            'max_abs_difference_mm': float(np.abs(d).max()) if d.size else float('nan'),
        }

    def to_csv(self, path):
        table = np.column_stack([self.depths, self.z, self.map_values * 1000.,
                                 self.profile_values * 1000.,
                                 self.differences_mm(), self.valid])
        with atomic_write(path) as fh:
            np.savetxt(fh, table, fmt=['%.3f', '%.3f', '%.3f', '%.3f', '%.3f', '%d'],
                       delimiter=',', header=COMPARE_HEADER, comments='')
        log.info("Wrote profile comparison %s", path)


def compare_profile(dmap, x, profile, ground_level):
    """Compare a deformation map column with an inclinometer profile.

    For each profile depth inside the map's vertical extent the
    difference is the map value at ``(x, ground_level - depth)`` minus
    the profile deformation expressed in wall-frame y. Depths whose
    cell is invalid are flagged. With no overlap an empty comparison
    is returned and a warning issued.

    """
    nz, nx = dmap.shape
    z = ground_level - profile.depths
    z_lo, z_hi = dmap.z0, dmap.z0 + nz * dmap.cell_size
    x_inside = dmap.x0 <= x < dmap.x0 + nx * dmap.cell_size
    inside = (z >= z_lo) & (z < z_hi) if x_inside else np.zeros(z.size, dtype=bool)
    if not inside.any():
        msg = "Profile at x={} m does not overlap the {} map".format(x, dmap.method)
        warnings.warn(msg, RuntimeWarning)
        log.warning(msg)
        empty = np.zeros(0)
        return ProfileComparison(empty, empty, empty, empty, empty.astype(bool))
    z_in = z[inside]
    values = np.array([dmap.value_at(x, zz) for zz in z_in])
    valid = np.isfinite(values)
    if not valid.all():
        log.info("%d of %d profile depths fall on invalid map cells",
                 int((~valid).sum()), valid.size)
    return ProfileComparison(profile.depths[inside], z_in, values,
                             profile.wall_y[inside], valid)
