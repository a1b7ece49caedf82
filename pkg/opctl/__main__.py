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


"""
This script is executed if you run `python -m opctl`.
"""

import sys

import opctl as oc


sys.exit(oc.start_cli())
