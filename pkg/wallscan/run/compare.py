# -*- coding: utf-8 -*-

"""Compare a deformation map column with an inclinometer profile."""

import logging
import sys

from ..deform import read_map_csv
from ..refinstr import read_profile_csv, compare_profile
from . import new_report, finish_report, out_path

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_compare(config):
    config.require('map', 'profile', 'x')
    report = new_report('compare', config)
    with report.stage('compare') as stats:
        dmap = read_map_csv(config.paths['map'], cell_size=config.cell_size)
        profile = read_profile_csv(config.paths['profile'])
        result = compare_profile(dmap, config.x, profile, config.ground_level)
        stats.update(result.summary())
    path = out_path(config, 'compare.csv')
    result.to_csv(path)
    report.add_output(path)
    report.comparison = result
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['compare'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
