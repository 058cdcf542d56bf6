# -*- coding: utf-8 -*-

"""Compute deformation maps between a reference and a query scan with
the selected estimators."""

import logging
import sys

from ..deform import run_method, filter_range, rasterize, DeformationMap
from ..report import write_archive
from . import load_pair, new_report, finish_report, out_path

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'

log = logging.getLogger(__name__)


def cmd_deform(config):
    """Run each configured method, filter the values to the configured
    range and write one ``deformation_<method>.csv`` map per method.

    Returns the :py:class:`~wallscan.report.RunReport`; the maps are
    attached to it as ``report.maps``.

    """
    report = new_report('deform', config)
    with report.stage('load') as stats:
        reference, query = load_pair(config)
        stats.update(reference_points=len(reference), query_points=len(query))
    lo, hi = config.filter_range
    maps = []
    for method in config.methods:
        with report.stage(method) as stats:
            result = run_method(method, reference, query, cell_size=config.cell_size,
                                m3c2_params=config.m3c2, icp_params=config.icp,
                                progress=config.progress)
            if isinstance(result, DeformationMap):
                dmap = filter_range(result, lo, hi)
            else:
                stats['pointwise'] = result.summary()
                if result.registration is not None:
                    stats['registration'] = result.registration.to_dict()
                dmap = rasterize(filter_range(result, lo, hi), config.cell_size)
            stats['map'] = dmap.summary()
            path = out_path(config, 'deformation_{}.csv'.format(method))
            dmap.to_csv(path)
            report.add_output(path)
            maps.append(dmap)
    if config.archive:
        write_archive(out_path(config, config.archive), maps)
        report.add_output(out_path(config, config.archive))
    report.maps = maps
    return finish_report(report, config)


def main(argv=None):
    from ..cli import main as cli_main
    return cli_main(['deform'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == '__main__':
    sys.exit(main())
