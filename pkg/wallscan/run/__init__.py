# -*- coding: utf-8 -*-

"""Runnable commands. Each module holds one ``cmd_*`` function taking a
:py:class:`~wallscan.config.RunConfig` plus a ``main()`` entry point.

Helpers shared by the commands live here.

"""

import os
import json
import logging

import numpy as np

from .. import __version__, exceptions_
from ..cloudcore import (RigidTransform, read_cloud, apply_transform,
                         to_wall_frame)
from ..report import RunReport, atomic_write

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'

log = logging.getLogger(__name__)


def out_path(config, name):
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def new_report(command, config):
    return RunReport(command=command, version=__version__, config=config.echo())


def finish_report(report, config):
    path = out_path(config, '{}_report.json'.format(report.command))
    report.write(path)
    return report


def load_cloud(config, key):
    config.require(key)
    cloud = read_cloud(config.paths[key])
    if len(cloud) == 0:
        raise exceptions_.EmptyInputError(
            "{} cloud {} has no points".format(key, config.paths[key]))
    return cloud


def read_transform(path):
    """Read a transform written by :py:func:`write_transform`."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        return RigidTransform.from_dict(data)
    except (ValueError, KeyError, TypeError) as e:
        raise exceptions_.ConfigError("Bad transform file {}: {}".format(path, e))


def write_transform(path, transform, extra=None):
    data = transform.to_dict()
    data['matrix'] = transform.as_matrix().tolist()
    data.update(extra or {})
    with atomic_write(path) as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write('\n')
    log.info("Wrote transform %s", path)


def load_pair(config):
    """Reference and query clouds in the wall frame, with the stored
    registration transform applied to the query."""
    reference = load_cloud(config, 'reference')
    query = load_cloud(config, 'query')
    if 'transform' in config.paths:
        query = apply_transform(query, read_transform(config.paths['transform']))
    frame = config.wall_frame(reference)
    if frame is not None:
        reference = to_wall_frame(reference, frame)
        query = to_wall_frame(query, frame)
    return reference, query


def read_targets(path):
    """Target pairs from a CSV with columns
    ``ref_x,ref_y,ref_z,qry_x,qry_y,qry_z``."""
    try:
        table = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    except ValueError as e:
        raise exceptions_.CloudFormatError(str(e), path=path)
    if table.shape[1] != 6:
        raise exceptions_.CloudFormatError(
            "expected 6 columns, got {}".format(table.shape[1]), path=path)
    return [(row[:3], row[3:]) for row in table]
