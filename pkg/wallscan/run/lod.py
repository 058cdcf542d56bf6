# -*- coding: utf-8 -*-

"""Estimate the minimum level of detection of each method from one
scan with the split-half spacing sweep."""

import logging
import sys

from ..cloudcore import to_wall_frame
from ..uncertainty import lod_sweep
from ..report import write_archive
from . import load_cloud, new_report, finish_report, out_path

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_lod(config):
    report = new_report('lod', config)
    cloud = load_cloud(config, 'reference')
    frame = config.wall_frame(cloud)
    if frame is not None:
        cloud = to_wall_frame(cloud, frame)
    with report.stage('sweep') as stats:
        lod = lod_sweep(cloud, methods=config.methods, levels=config.levels,
                        seed=config.seed, cell_size=config.cell_size,
                        height=config.m3c2.height, progress=config.progress)
        stats.update(lod.summary())
        stats['rows'] = [row._asdict() for row in lod.rows]
    path = out_path(config, 'lod.csv')
    lod.to_csv(path)
    report.add_output(path)
    if config.archive:
        write_archive(out_path(config, config.archive), lod=lod)
        report.add_output(out_path(config, config.archive))
    report.lod = lod
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['lod'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
