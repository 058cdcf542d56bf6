# -*- coding: utf-8 -*-

"""Command line interface: ``wallscan <command> [options]``.

Commands
  register, deform, lod, synth, smallangle, inclinometer, compare,
  version.

Settings come from the built-in defaults, then ``--config FILE``, then
the flags. Exit status is 0 on success and 1 on any error, with a
message naming the offending input on stderr.

"""

import sys
import logging
import argparse

from . import __version__, exceptions_
from .config import read_config_file, update_variable_dict, RunConfig
from .run.register import cmd_register
from .run.deform import cmd_deform
from .run.lod import cmd_lod
from .run.synth import cmd_synth
from .run.smallangle import cmd_smallangle
from .run.inclinometer import cmd_inclinometer
from .run.compare import cmd_compare

__author__ = 'wallscan developers'
__copyright__ = 'Copyright (c) 2026, wallscan developers.'
__docformat__ = 'restructuredtext en'
__platform__ = 'Unix'
__version__ = '0.1.0'
__all__ = ['main', 'build_parser', 'COMMANDS']

log = logging.getLogger(__name__)

COMMANDS = {
    'register': cmd_register,
    'deform': cmd_deform,
    'lod': cmd_lod,
    'synth': cmd_synth,
    'smallangle': cmd_smallangle,
    'inclinometer': cmd_inclinometer,
    'compare': cmd_compare,
}

ERRORS = (exceptions_.EmptyInputError, exceptions_.DegenerateInputError,
          exceptions_.InvariantError, exceptions_.CloudFormatError,
          exceptions_.RegistrationError, exceptions_.FieldExtentError,
          exceptions_.ConfigError, OSError)


def _options():
    """Flags shared by every command. Defaults are None so that unset
    flags leave the configuration file alone."""
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group('general')
    g.add_argument('--config', help='key = value settings file')
    g.add_argument('-v', '--verbose', action='count', default=0,
                   help='-v for info, -vv for debug messages')
    g.add_argument('--log-file', help='write log messages to this file')
    g.add_argument('--no-progress', dest='progress', action='store_false',
                   default=None, help='hide progress bars')
    g.add_argument('--out-dir', help='directory for results')
    g.add_argument('--archive', help='also write results to this HDF5 file')
    g.add_argument('--seed', type=int)
    g = p.add_argument_group('inputs')
    g.add_argument('--reference', help='reference cloud (.xyz or .ply)')
    g.add_argument('--query', help='query cloud (.xyz or .ply)')
    g.add_argument('--transform', help='transform JSON applied to the query')
    g.add_argument('--targets', help='CSV of reference/query target centroids')
    g.add_argument('--scene', help='synthetic scene file')
    g.add_argument('--trace', help='inclinometer trace CSV')
    g.add_argument('--profile', help='depth profile CSV')
    g.add_argument('--map', help='deformation map CSV')
    g = p.add_argument_group('wall frame')
    g.add_argument('--frame', choices=('identity', 'fit', 'explicit'))
    g.add_argument('--frame-origin', type=float, nargs=3)
    g.add_argument('--frame-axes', type=float, nargs=9,
                   help='rows x, y, z of the wall axes')
    g.add_argument('--sensor', type=float, nargs=3,
                   help='scanner position, used to orient normals and the frame')
    g = p.add_argument_group('methods')
    g.add_argument('--mode', choices=('icp', 'targets'))
    g.add_argument('--method', help='c2m, m2m, m3c2, icp, a comma list, or all')
    g.add_argument('--cell-size-mm', type=float)
    g.add_argument('--filter-lo-mm', type=float)
    g.add_argument('--filter-hi-mm', type=float)
    g.add_argument('--m3c2-normal-diameter', type=float)
    g.add_argument('--m3c2-projection-diameter', type=float)
    g.add_argument('--m3c2-height', type=float)
    g.add_argument('--m3c2-resolution', type=float)
    g.add_argument('--m3c2-wall-y', action='store_true', default=None,
                   help='report M3C2 as y displacement instead of distance along the normal')
    g.add_argument('--icp-max-iterations', type=int)
    g.add_argument('--icp-rejection-factor', type=float)
    g.add_argument('--icp-normal-radius', type=float)
    g.add_argument('--emphasis-box', type=float, nargs=6,
                   help='xmin ymin zmin xmax ymax zmax')
    g.add_argument('--emphasis-weight', type=float)
    g.add_argument('--levels', type=int)
    g = p.add_argument_group('reference instruments')
    g.add_argument('--delta-beta', type=float, help='angle change, arcseconds')
    g.add_argument('--length', type=float, help='sight length, metres')
    g.add_argument('--x', type=float, help='map column of the inclinometer, metres')
    g.add_argument('--ground-level', type=float, help='z of the ground, metres')
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog='wallscan',
        description='Deformation monitoring of retaining walls from laser scans.')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    common = _options()
    helps = {
        'register': 'register a query scan to the reference',
        'deform': 'compute deformation maps',
        'lod': 'split-half minimum level of detection sweep',
        'synth': 'generate a synthetic scene',
        'smallangle': 'total-station small-angle deformation',
        'inclinometer': 'depth profile from an inclinometer trace',
        'compare': 'compare a map column with a depth profile',
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    sub.add_parser('version', help='print the version')
    return parser


def _setup_logging(verbose, log_file=None):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, filename=log_file,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    logging.captureWarnings(True)


def config_from_args(args):
    """Merge defaults, the ``--config`` file and the flags into a
    :py:class:`RunConfig`."""
    values = read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items()
             if k not in ('config', 'verbose', 'log_file', 'command')}
    update_variable_dict(values, flags)
    return RunConfig.from_dict(values)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'version':
        print(__version__)
        return 0
    _setup_logging(args.verbose, args.log_file)
    try:
        config = config_from_args(args)
        COMMANDS[args.command](config)
    except ERRORS as e:
        log.error("%s failed: %s", args.command, e)
        print("wallscan {}: error: {}".format(args.command, e), file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
