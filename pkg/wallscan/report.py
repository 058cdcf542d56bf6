# -*- coding: utf-8 -*-

"""Run reports and result files.

RunReport
  Structured record of one command: version, configuration echo,
  per-stage statistics and timings. Written as JSON with sorted keys.

Output files are written through :py:func:`atomic_write` so that a
crashed run never leaves a half-written artifact behind.

"""

import os
import json
import time
import logging
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import h5py
import numpy as np

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['RunReport', 'atomic_write', 'atomic_path', 'write_archive']

log = logging.getLogger(__name__)


@contextmanager
def atomic_path(path):
    """Yield a temporary filename next to ``path``; on success it is
    renamed onto ``path``, on failure it is removed."""
    path = str(path)
    dirname = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirname, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.' + os.path.basename(path) + '.',
                               suffix='.tmp', dir=dirname)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


@contextmanager
def atomic_write(path, mode='w'):
    """Open a file for writing that only appears at ``path`` once the
    context exits cleanly."""
    with atomic_path(path) as tmp:
        with open(tmp, mode, newline='' if 'b' not in mode else None) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


@dataclass
class RunReport(object):
    """Structured report for one command.

    Attributes
    ----------
    command : str
      Name of the sub-command that produced the report.
    version : str
      wallscan version.
    config : dict
      Echo of the resolved configuration.
    stages : dict
      Statistics per stage, keyed by stage name.
    timings : dict
      Wall-clock seconds per stage.

    """
    command: str
    version: str = ''
    config: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    @contextmanager
    def stage(self, name):
        """Time a block and collect its statistics.

        Yields the dictionary that stores the stage's statistics.

        """
        stats = self.stages.setdefault(name, {})
        start = time.perf_counter()
        log.debug("Starting stage %s", name)
        try:
            yield stats
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = elapsed
            log.info("Stage %s finished in %.2f s", name, elapsed)

    def add_output(self, path):
        self.outputs.append(str(path))

    def to_dict(self):
        return _jsonable({
            'command': self.command,
            'version': self.version,
            'config': self.config,
            'stages': self.stages,
            'timings': self.timings,
            'outputs': self.outputs,
        })

    def write(self, path):
        with atomic_write(path) as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write('\n')
        log.info("Wrote run report %s", path)


def write_archive(path, maps=(), lod=None, transform=None):
    """Store deformation maps (and optionally an LoD report and a
    registration transform) in one HDF5 file.

    Layout::

      /maps/<method>/values   deformation in mm, nan where invalid
      /maps/<method>/counts
      /maps/<method>/valid
      /lod/<column>
      /registration/matrix

    """
    with atomic_path(path) as tmp:
        with h5py.File(tmp, mode='w') as hdf_f:
            for dmap in maps:
                grp = hdf_f.create_group('/maps/{}'.format(dmap.method))
                grp.create_dataset('values', data=dmap.values_mm())
                grp.create_dataset('counts', data=dmap.counts)
                grp.create_dataset('valid', data=dmap.valid)
                grp.attrs['x0'] = dmap.x0
                grp.attrs['z0'] = dmap.z0
                grp.attrs['cell_size'] = dmap.cell_size
            if lod is not None:
                grp = hdf_f.create_group('/lod')
                for name, column in lod.columns().items():
                    data = np.asarray(column)
                    if data.dtype.kind == 'U':
                        data = data.astype('S')
                    grp.create_dataset(name, data=data)
            if transform is not None:
                hdf_f.create_dataset('/registration/matrix',
                                     data=transform.as_matrix())
    log.info("Wrote archive %s", path)
