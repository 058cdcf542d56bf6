# -*- coding: utf-8 -*-

"""Generate a synthetic reference/query pair from a scene file."""

import logging
import sys

from ..cloudcore import write_cloud
from ..synth import read_scene_file, build_scene
from . import new_report, finish_report, out_path, write_transform

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_synth(config):
    """Write ``reference.xyz`` and ``query.xyz`` plus the ground truth:
    ``truth.csv`` (imposed field on the map grid) for wall scenes or
    ``truth_transform.json`` (query to reference) for facade scenes."""
    config.require('scene')
    report = new_report('synth', config)
    with report.stage('generate') as stats:
        values = read_scene_file(config.paths['scene'])
        scene = build_scene(values)
        stats.update(scene={k: values[k] for k in sorted(values)},
                     reference_points=len(scene.reference),
                     query_points=len(scene.query))
    for name, cloud in (('reference.xyz', scene.reference), ('query.xyz', scene.query)):
        path = out_path(config, name)
        write_cloud(cloud, path)
        report.add_output(path)
    if scene.field is not None:
        path = out_path(config, 'truth.csv')
        scene.field.to_map(config.cell_size).to_csv(path)
        report.add_output(path)
    if scene.displacement is not None:
        path = out_path(config, 'truth_transform.json')
        write_transform(path, scene.displacement.inverse())
        report.add_output(path)
    report.scene = scene
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['synth'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
