#!/usr/bin/python3
# coding: utf-8

import os

from setuptools import setup, find_packages

NAME = "bqsp"
VERSION = "0.1.0"

# To install the library, run the following
#
# python setup.py install
#
# prerequisite: setuptools
# http://pypi.python.org/pypi/setuptools

# see https://setuptools.pypa.io/en/latest/userguide/quickstart.html

# Utility function to read the README.md file for the long_description.
def read(filename):
    return open(os.path.join(os.path.dirname(__file__), filename)).read()

setup(
    name=NAME,
    version=VERSION,
    python_requires='>=3.12',
    description="Phase-space instruction set simulator for hybrid oscillator-qubit control",
    license="MIT",
    keywords=["quantum signal processing", "bosonic codes", "GKP", "circuit QED"],
    install_requires=[
        "numpy>=2.0",
        "scipy",
        "pytest"
    ],
    entry_points={
        'console_scripts': ['bqsp = bqsp.cli:main'],
        'pytest11': ['bqsp = bqsp.fixtures']
    },
    packages=find_packages(),
    long_description=read("README.md"),
    include_package_data=True
)
