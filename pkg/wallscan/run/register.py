# -*- coding: utf-8 -*-

"""Register a query scan to a reference scan, from targets or by
point-to-plane ICP, and check the result with cloud-to-mesh
distances."""

import logging
import sys

from .. import exceptions_
from ..cloudcore import apply_transform
from ..registration import (estimate_normals, icp_point_to_plane,
                            register_targets, registration_qc,
                            default_normal_radius)
from . import (load_cloud, new_report, finish_report, out_path, read_targets,
               write_transform)

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_register(config):
    """Find the transform taking the query onto the reference.

    Writes ``transform.json`` and ``register_report.json`` to the
    output directory.

    """
    report = new_report('register', config)
    reference = query = None
    if config.mode == 'targets':
        config.require('targets')
        path = config.paths['targets']
        with report.stage('targets') as stats:
            try:
                result = register_targets(read_targets(path))
            except exceptions_.DegenerateConfigurationError as e:
                raise exceptions_.DegenerateConfigurationError("{}: {}".format(path, e))
            stats.update(result.to_dict())
    else:
        reference = load_cloud(config, 'reference')
        query = load_cloud(config, 'query')
        with report.stage('icp') as stats:
            radius = config.icp.normal_radius or default_normal_radius(reference)
            normals = estimate_normals(reference, radius, sensor=config.sensor,
                                       progress=config.progress)
            result = icp_point_to_plane(query, reference, normals, config.icp)
            stats.update(result.to_dict())
            stats['normal_radius_m'] = radius
    if reference is None and 'reference' in config.paths and 'query' in config.paths:
        reference = load_cloud(config, 'reference')
        query = load_cloud(config, 'query')
    if reference is not None:
        with report.stage('qc') as stats:
            qc = registration_qc(reference, apply_transform(query, result.transform))
            stats.update(qc.to_dict())
    path = out_path(config, 'transform.json')
    write_transform(path, result.transform, {'rmse': result.rmse})
    report.add_output(path)
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['register'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
