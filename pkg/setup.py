# opctl
# Copyright (C) 2020 The opctl developers
#
# This file is part of opctl.
#
# opctl is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# opctl is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with opctl.  If not, see <https://www.gnu.org/licenses/>.


import setuptools


with open("README.md", "r") as fh:
    long_description = fh.read()

with open("version.txt", "r") as fh:
    version = fh.read().strip()

setuptools.setup(
    name="opctl",
    version=version,
    author="The opctl developers",
    description="Set stabilization of finite-field networks controlling "
                "plants over a shared wireless channel",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    package_data={
        "opctl": ["models/*.yaml"],
    },
    python_requires=">=3.8",
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    entry_points={
        'console_scripts': [
            "opctl = opctl:start_cli"
        ],
    },
    install_requires=[
        "numpy",
        "ruamel.yaml",
        "coloredlogs",
        "argparse",
        "scipy",
        "networkx>=2.6",
        "matplotlib",
    ],
    extras_require={
        "dev": ["pytest"],
    },
)
