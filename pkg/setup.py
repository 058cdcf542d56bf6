#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup
import os

setup(
    name='wallscan',
    author='Mark Wolf, Doga Gursoy, Francesco De Carlo',
    packages=['wallscan', 'wallscan.run'],
    version=open(os.path.join(os.path.dirname(__file__), 'VERSION')).read().strip(),
    description = 'Deformation monitoring of retaining walls from terrestrial laser scans.',
    license='BSD-3',
    platforms='Any',
    install_requires=['numpy', 'scipy', 'h5py', 'tqdm'],
    entry_points={
        'console_scripts': ['wallscan=wallscan.cli:main'],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: BSD-3',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
    ],
)
