# -*- coding: utf-8 -*-

"""Turn an inclinometer trace into a lateral depth profile."""

import logging
import sys

from ..refinstr import read_trace_csv, inclinometer_profile
from . import new_report, finish_report, out_path

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_inclinometer(config):
    config.require('trace')
    report = new_report('inclinometer', config)
    with report.stage('profile') as stats:
        trace = read_trace_csv(config.paths['trace'])
        profile = inclinometer_profile(trace)
        stats.update(readings=len(trace), tube_depth_m=trace.tube_depth,
                     surface_deformation_mm=float(profile.deformation[-1] * 1000.))
    path = out_path(config, 'profile.csv')
    profile.to_csv(path)
    report.add_output(path)
    report.profile = profile
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['inclinometer'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
