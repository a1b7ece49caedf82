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



import logging
import coloredlogs
import argparse
import sys
import os
import typing
import ruamel.yaml
import subprocess
import datetime

# Ignore flake8 "imported but unused" by adding `# noqa: F401`:

from .errors import (  # noqa: F401
    ModelValidationError,
    NumericError,
    SteinSolutionError,
    ThresholdUndefinedError,
    NotStabilizableError,
    LyapunovViolationError,
)
from . import util  # noqa: F401

# Enums:
from .threshold_method import ThresholdMethod  # noqa: F401
from .noise import NoiseDistribution  # noqa: F401

from . import properties  # noqa: F401
from .component import Component, InitStages  # noqa: F401

from . import stp  # noqa: F401
from .stp import DeltaIndex, LogicalMatrix, parse_delta  # noqa: F401
from .ffn import (  # noqa: F401
    Profile,
    SwitchingMap,
    Constraints,
    FfnSpec,
    TransitionMatrix,
    compile_assr,
    compile_assr_dense,
    step_direct,
    tabulate_step_direct,
    step_algebraic,
    admissible_z_set,
    closed_loop_successor,
    closed_loop_path,
    constraints_from_table,
)
from .coupling import (  # noqa: F401
    PlantModel,
    ChannelPrimitives,
    CouplingTable,
    ThresholdVector,
    coupling_rows,
    solve_stein,
    rayleigh_maximizer,
    success_interval,
    success_threshold,
    thresholds,
    decay_margin,
    steady_state_bound,
    omega_set,
    normalize_stein_weight,
    stein_weight,
)
from .synthesis import (  # noqa: F401
    TargetSet,
    InvariantSet,
    ContractedGraph,
    BfsCertificate,
    GainFamily,
    SynthesisResult,
    phi_set,
    lccis,
    verify_ccis,
    restrict_invariant_set,
    build_contracted_graph,
    bfs_certificate,
    synthesize_gains,
    synthesize,
    is_admissible_law,
)
from .cosim import (  # noqa: F401
    SimConfig,
    Trajectory,
    profile_path,
    simulate_closed_loop,
    mean_lyapunov,
    mean_states,
)
from .lyapunov import (  # noqa: F401
    PlantLyapunovSummary,
    LyapunovReport,
    lyapunov_report,
)
from . import plotter_csv  # noqa: F401
from . import plotter_svg  # noqa: F401
from .plotter_terminal import render_report, log_report  # noqa: F401
from . import config_preprocessing  # noqa: F401
from .config_preprocessing import (  # noqa: F401
    assemble_config_recursively,
    update_dict_recursively,
    write_config,
)
from .model import Model, load_model, shipped_model_path  # noqa: F401
from .pipeline import (  # noqa: F401
    COMMANDS,
    RunReport,
    run_pipeline,
    select_law,
    stage_summary,
    write_delta,
    read_delta,
    write_index_set,
    read_index_set,
    parse_target,
)


name = "opctl"

LOG = logging.getLogger(__name__)

EXIT_SUCCESS = 0


def start_cli(argv: typing.Optional[typing.List[str]] = None) -> int:
    """
    Run a pipeline command from the command line.
    This will be called if run as `python -m opctl ARGS…`.

    :return: The exit code: 0 on success, 1 if the Lyapunov check failed,
        2 if the model is not stabilizable, 3 for invalid models and 4 for
        numerical failures.
    """
    args = parse_args(argv=argv)
    setup_logging(
        verbosity=args.verbosity,
        log_file=args.log_file,
        log_file_verbosity=args.log_file_verbosity,
        results_dir=args.results_dir
    )
    if args.debug:
        import pdb
        pdb.set_trace()
    if args.param is None:
        args.param = []
    try:
        if args.seed is not None:
            util.check_seed(args.seed, '--seed')
        override_params = args_config_params_to_dict(args.param)
        model = Model.construct_from_config(
            filename=args.model,
            override_config=override_params,
            results_dir=args.results_dir,
            log_config=args.log_config,
        )
        target = None
        if args.target is not None:
            target = parse_target(args.target, model.spec.n_states)
        if not args.no_versions_file:
            write_versions_file(
                filename=os.path.join(args.results_dir, 'versions.txt'),
            )
        run_pipeline(
            model,
            args.command,
            results_dir=args.results_dir,
            seed=args.seed,
            target=target,
        )
    except (
            ModelValidationError,
            NumericError,
            NotStabilizableError,
            LyapunovViolationError,
    ) as e:
        LOG.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except BaseException as e:
        # Write stacktrace to log file (and stdout/stderr(?)):
        LOG.exception("Unhandled exception in pipeline.")
        # Re-raise the exception so it can be caught by PDB, for example:
        raise e
    if not args.no_success_file:
        # Write a file called SUCCESS for Make, Snakemake, etc.:
        with open(os.path.join(args.results_dir, 'SUCCESS'), 'w') as f:
            f.write(datetime.datetime.now().isoformat())
    return EXIT_SUCCESS


def parse_args(
        existing_parser: argparse.ArgumentParser = None,
        argv: typing.Optional[typing.List[str]] = None,
):
    """
    Parse command line arguments.

    :param existing_parser: Optional existing argument parser with custom
        arguments.
    :param argv: Arguments to parse instead of `sys.argv[1:]`.
    :return:
    """
    if existing_parser is not None:
        existing_parser.add_help = False  # necessary for use as parent

    main_parser = argparse.ArgumentParser(
        prog="opctl",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[existing_parser] if existing_parser is not None else []
    )
    main_parser.add_argument(
        'command',
        choices=COMMANDS,
        help="Pipeline stage to run. Each command runs all previous "
             "stages first; `verify` fails unless the model is "
             "stabilizable and the Lyapunov check passes."
    )
    main_parser.add_argument(
        '--debug',
        action='store_true',
        help="Run with pdb or pdbpp for debugging."
    )

    group = main_parser.add_argument_group("Model")
    group.add_argument(
        '--model',
        required=True,
        help="Model file, e.g. the shipped `opctl/models/agvs_two_arms.yaml`."
    )
    group.add_argument(
        '--out',
        '--results-dir',
        dest='results_dir',
        help="Directory for result files. "
             "Ignored if left as an empty string.",
        default='',
    )
    group.add_argument(
        '--seed',
        type=int,
        default=None,
        help="Seed for the simulation; overrides `sim.seed`."
    )
    group.add_argument(
        '--target',
        default=None,
        help="Restricted target set of state profiles, e.g. \"3,5\"; "
             "overrides `targets.restricted`."
    )
    group.add_argument(
        '--param',
        '-p',
        nargs='*',
        help="Parameters to override from the model file. "
             "Example: "
             "`-p \"sim.horizon=100\" \"targets.restricted=[3]\"`."
    )

    group = main_parser.add_argument_group("Logging")
    group.add_argument(
        '--verbosity',
        help="Logging verbosity",
        default='INFO',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
    )
    group.add_argument(
        '--log-file',
        help="Name of the log file, relative to --out.",
        default='opctl.log',
    )
    group.add_argument(
        '--no-success-file',
        action='store_true',
        help="Do not write a SUCCESS file. "
             "By default, a mostly empty file called SUCCESS will be written "
             "into --out if the command finishes without errors. "
             "Such a file can be useful for tools such as GNU Make or "
             "Snakemake. "
             "For now, the date and time of when the command ended are the "
             "only content of the file."
    )
    group.add_argument(
        '--no-versions-file',
        action='store_true',
        help="Do not write a versions.txt file. "
             "With the purpose of making results more "
             "reproducible, opctl by default uses "
             "`git describe --all --always` "
             "or, alternatively, the current package version "
             "to note the state of the codebase with which the results "
             "were produced."
    )
    group.add_argument(
        '--log-file-verbosity',
        help="Verbosity for the log file",
        default='DEBUG',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
    )
    group.add_argument(
        '--log-config',
        help="Write the final assembled model to --out.",
        action='store_true',
    )

    args = main_parser.parse_args(args=argv)
    return args


# Handlers added by the last setup_logging call.
_installed_handlers: typing.List[logging.Handler] = []


def setup_logging(
        verbosity='INFO',
        log_file='opctl.log',
        log_file_verbosity='DEBUG',
        results_dir='',
):
    root_logger = logging.getLogger()
    for handler in _installed_handlers:
        root_logger.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()
    root_logger.setLevel(logging.DEBUG)  # possibly overridden from args later
    stream_handler = logging.StreamHandler(stream=sys.stdout)
    stream_handler.setFormatter(coloredlogs.ColoredFormatter(
        style='{',
        fmt='{asctime} {levelname} {name}:\n\t{message}',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    stream_handler.setLevel(verbosity)
    root_logger.addHandler(stream_handler)
    _installed_handlers.append(stream_handler)

    if results_dir != '':
        os.makedirs(results_dir, exist_ok=True)
    log_file = os.path.join(results_dir, log_file)
    file_handler = logging.FileHandler(filename=log_file, mode='w')
    file_handler.setFormatter(logging.Formatter(
        style='{',
        fmt='{asctime} {levelname} {name}: {message}',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    file_handler.setLevel(log_file_verbosity)
    root_logger.addHandler(file_handler)
    _installed_handlers.append(file_handler)


def write_versions_file(filename):
    try:
        opctl_label = subprocess.check_output(
            ["git", "describe", "--always", "--all", "--long"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            stderr=subprocess.DEVNULL,
        ).strip().decode()
    except (subprocess.CalledProcessError, OSError) as e:  # noqa: F841
        opctl_label = "UNKNOWN VERSION"
    with open(filename, 'w') as f:
        f.write(f"opctl: {opctl_label}\n")
        f.write(f"Python: {sys.version.split()[0]}\n")


def args_config_params_to_dict(params: typing.List[str]) -> dict:
    """
    Convert params given in the format
    `"a.b.c=value"`
    for overriding the model file
    to a dictionary.

    `"a.b.c=value"` should lead to `{'a': {'b': {'c': value}}}`,
    where `value` is parsed as YAML.
    """
    result = dict()

    def _insert(_remaining_keys: typing.List[str], _sub_dict: dict, _value):
        if len(_remaining_keys) == 1:
            _sub_dict[_remaining_keys[0]] = _value
            return
        _top_key = _remaining_keys.pop(0)
        if _top_key not in _sub_dict:
            _sub_dict[_top_key] = dict()
        _insert(_remaining_keys, _sub_dict[_top_key], _value)

    for param in params:
        split = param.split(sep='=', maxsplit=1)
        if len(split) != 2:
            raise ModelValidationError(
                f"\"{param}\" is not a valid parameter definition: "
                "Missing '='.",
                path='--param',
            )
        key_path = split[0]
        keys = [k.strip() for k in key_path.split(sep='.')]

        # Parse the value as YAML to automatically convert non-strings to
        # the expected type:
        yaml = ruamel.yaml.YAML(typ='safe')
        value = yaml.load(split[1])

        _insert(keys, result, value)
    return result


if __name__ == '__main__':
    sys.exit(start_cli())
