# -*- coding: utf-8 -*-

"""Lateral deformation from a total-station angle change."""

import logging
import sys

from ..refinstr import small_angle_deformation, small_angle_exact
from . import new_report, finish_report

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_smallangle(config):
    config.require('delta_beta', 'length')
    report = new_report('smallangle', config)
    with report.stage('smallangle') as stats:
        d = small_angle_deformation(config.delta_beta, config.length)
        stats.update(delta_beta_arcsec=config.delta_beta, length_m=config.length,
                     deformation_mm=d * 1000.,
                     exact_mm=small_angle_exact(config.delta_beta, config.length) * 1000.)
    print("D = {:.4f} mm".format(d * 1000.))
    report.deformation = d
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['smallangle'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
