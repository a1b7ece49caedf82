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


import os
import ruamel.yaml
import opctl as oc


def test_update_dict_recursively():
    a = dict(
        sim=dict(
            plot=True,
            reference_laws=dict(random_pi='δ_3[2 1 1 1 2 2 3 2 2]', x=1),
        ),
        description='model',
    )
    b = dict(
        sim=dict(
            uninherit=['plot'],
            reference_laws=dict(
                random_pi='δ_3[2 1 1 1 2 2 3 2 2]',
                x=2,
                uninherit=['random_pi'],
            )
        ),
        description='variant',
    )
    oc.update_dict_recursively(
        to_update=a,
        to_read=b,  # has precedence
        uninherit=True,
    )
    assert a == dict(
        sim=dict(
            reference_laws=dict(random_pi='δ_3[2 1 1 1 2 2 3 2 2]', x=2),
        ),
        description='variant',
    )


def test_assemble_config_recursively():
    yaml = ruamel.yaml.YAML(typ='safe')
    expected_result_path = os.path.join(
        os.path.dirname(__file__),
        "a_b_override.yaml"
    )
    b_path = os.path.join(
        os.path.dirname(__file__),
        "b.yaml"
    )
    with open(expected_result_path, 'r') as fh:
        expected = yaml.load(fh)

    result = oc.assemble_config_recursively(
        conf=b_path,  # inherits from c.yaml and a.yaml
        # As added with --param on the command line:
        override_conf=dict(
            targets=dict(uninherit=['threshold_override']),
            sim=dict(law=2),
            uninherit=['dropped_note'],
            horizon_note=3,
        ),
    )
    assert result == expected


def test_args_config_params_to_dict():
    params = [
        'description=x',
        'sim.seed=7',
        'targets.restricted=[3, 5]',
        'sim.reference_laws.pi=\'δ_3[2 1 1 1 2 2 3 2 2]\'',
    ]
    result = oc.args_config_params_to_dict(params)
    assert result == dict(
        description='x',
        sim=dict(seed=7, reference_laws=dict(pi='δ_3[2 1 1 1 2 2 3 2 2]')),
        targets=dict(restricted=[3, 5]),
    )
