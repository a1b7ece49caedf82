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

from abc import ABC
from typing import Set, cast
from enum import Enum
import logging
import inspect

import opctl as oc
import opctl.properties as prop


LOG = logging.getLogger(__name__)


class InitStages(Enum):
    """
    Initialization stages for ensuring that :class:`~opctl.Component`
    instances are initialized in the right order.

    InitStages are executed in increasing order of their respective
    value (i.e., in the order as listed in the source file,
    not as listed in the documentation).
    """

    CHECK_ARGUMENTS = 1
    """Check validity of arguments."""
    BUILD_NETWORK = 2
    BUILD_PLANTS = 3
    BUILD_CHANNEL = 4
    BUILD_TARGETS = 5
    BUILD_SIMULATION = 6


class Component(ABC):
    """
    Base class for model sections that can be configured via
    YAML files.
    """

    component_name = prop.StrProperty(
        default="Generic component",
        required=False,
    )
    """
    Path of this section in the model file, used in error messages.
    """

    def __init__(self):
        self._arguments_already_set: Set[str] = set()
        """
        Names of arguments already set via `set_arguments()`
        Mandatory arguments not in this set at the time when `initialize()`
        is first called will cause an exception.
        """
        self._mandatory_arguments: Set[str] = set()
        """
        Names of arguments that should cause an exception if they are not set
        by the time `initialize()` is first called.
        """

        # Convert class properties to instance variables, using their default
        # values. Any value can be overwritten with `set_arguments()`.
        properties = dict()
        for attr_name, class_attr in inspect.getmembers(
                self.__class__,
                lambda m: isinstance(m, prop.AbstractProperty)
        ):
            current_prop = cast(prop.AbstractProperty, class_attr)
            properties[attr_name] = current_prop
            if current_prop.required:
                self._mandatory_arguments.add(attr_name)
        self._property_names = set(properties.keys())
        self.__dict__.update(properties)

    def set_arguments(self, **kwargs):
        """
        Read arguments as key value pairs and set this component's
        member variables accordingly.
        Validity of the argument values will be checked in
        :meth:`~opctl.Component.initialize`.
        """
        unrecognized_args = set(kwargs.keys()) - self._property_names
        if len(unrecognized_args) != 0:
            raise TypeError(
                "Unrecognized arguments for "
                f"\"{kwargs.get('component_name', self.component_name)}\": "
                + ", ".join(sorted(unrecognized_args))
                + " -- Valid arguments: "
                + ", ".join(sorted(self._property_names - {'component_name'}))
            )
        self.__dict__.update(kwargs)
        for key in kwargs.keys():
            self._arguments_already_set.add(key)

    def path(self, attr_name: str) -> str:
        return f"{self.component_name}.{attr_name}"

    def initialize(self, model: 'oc.Model', init_stage: 'oc.InitStages'):
        """
        Use :class:`~opctl.InitStages` to initialize this Component
        instance.
        """
        if init_stage == InitStages.CHECK_ARGUMENTS:
            missing_args = (
                self._mandatory_arguments - self._arguments_already_set
            )
            if len(missing_args) != 0:
                raise oc.ModelValidationError(
                    "missing mandatory keys: "
                    + ", ".join(sorted(missing_args)),
                    path=self.component_name,
                )

            # Iterate over all AbstractProperties of the current class
            # for additional safety checks.
            # (Not iterating over items of this instance as they may have
            # been overwritten with configuration values, replacing
            # the AbstractProperty instances.)
            for attr_name, class_attr in inspect.getmembers(
                    self.__class__,
                    lambda m: isinstance(m, prop.AbstractProperty)
            ):
                instance_attr = getattr(self, attr_name)
                if isinstance(class_attr, prop.EnumProperty):
                    oc.util.check_enum_key(
                        enum_class=class_attr.property_enum_class,
                        key=instance_attr,
                        param_name=self.path(attr_name),
                    )
                if (
                        isinstance(class_attr, prop.MatrixProperty)
                        and attr_name in self._arguments_already_set
                ):
                    setattr(self, attr_name, oc.util.check_matrix(
                        instance_attr,
                        path=self.path(attr_name),
                    ))
                if isinstance(class_attr, (prop.IntProperty,
                                           prop.FloatProperty)):
                    if (
                            isinstance(instance_attr, bool)
                            or not isinstance(instance_attr, (int, float))
                    ):
                        raise oc.ModelValidationError(
                            f"{instance_attr!r} is not a number.",
                            path=self.path(attr_name),
                        )
                if isinstance(class_attr, prop.IntProperty):
                    if int(instance_attr) != instance_attr:
                        raise oc.ModelValidationError(
                            f"{instance_attr!r} is not an integer.",
                            path=self.path(attr_name),
                        )
                    setattr(self, attr_name, int(instance_attr))
                if isinstance(class_attr, prop.FloatProperty):
                    setattr(self, attr_name, float(instance_attr))
