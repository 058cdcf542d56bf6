# -*- coding: utf-8 -*-

"""Deformation monitoring of retaining walls from multi-temporal
terrestrial laser scans."""

__version__ = '0.1.0'
