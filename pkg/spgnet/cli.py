# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
The ``spgnet`` command.

Exit codes: 0 on success, 1 when a run fails (diagnostics on stderr), 2 on a usage error.
"""

import argparse
import logging
import os
import sys

from . import __version__
from .checks import ALL, SUITES, run_suite
from .config import RunConfig, parse_assignment, sidecar_path
from .deform import PHI_SUFFIX, VIS_SUFFIX, FlowField
from .exceptions import FormatError, SpgError
from .io import read_ppm, save_tensor, write_ppm
from .metrics import METRICS, evaluate_directories
from .models import ModelConfig, SPATNModel, SPGNetModel
from .pose import KAPPA, build_pose_tensor, read_keypoints
from .semantics import SemanticMap
from .synth import synth_dataset, write_dataset
from .tensor import Tensor
from .train import SCHEMES, run_distance_map_ablation, run_schemes, train_stage1, train_stage2, transfer


LOGGER = logging.getLogger(__name__)


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _overrides(args):
    return [parse_assignment(text, "--set") for text in args.set or []]


def load_config(path=None, overrides=None):
    """Resolve a RunConfig from an optional file plus ``(key, value)`` overrides."""
    if path:
        return RunConfig.from_file(path, overrides)
    return RunConfig(overrides)


def _flow_prefix(path):
    for suffix in (PHI_SUFFIX, VIS_SUFFIX):
        if path.endswith(suffix):
            return path[:-len(suffix)]
    return path


def _require(path):
    if not os.path.exists(path):
        raise FormatError("no such file: %s" % path)
    return path


def synth_data(args):
    samples = synth_dataset(args.n, args.size, args.classes, args.seed, args.pairs_per_identity,
                            args.crossed_fraction)
    write_dataset(samples, args.out)


def pose_maps(args):
    keypoints = read_keypoints(args.keypoints)
    pose = build_pose_tensor(keypoints, None, args.size, args.size, sigma=args.sigma, kappa=args.kappa,
                             distance_maps=not args.no_distance_maps)
    save_tensor(args.out, pose.data)
    LOGGER.info("Wrote %i-channel pose tensor to %s", pose.shape[1], args.out)


def train_spatn(args):
    overrides = _overrides(args)
    if args.no_distance_maps:
        overrides.append(("distance_maps", False))
    config = load_config(args.config, overrides)
    if args.ablation:
        run_distance_map_ablation(config, out_dir=args.out)
    else:
        train_stage1(config, out_dir=args.out)


def train_spgnet(args):
    config = load_config(args.config, _overrides(args))
    if args.scheme == ALL:
        run_schemes(config, out_dir=args.out)
    else:
        train_stage2(config, args.scheme, out_dir=args.out)


def infer(args):
    config_path = args.config or _require(sidecar_path(args.spgnet))
    config = load_config(config_path)
    model_config = ModelConfig.from_config(config)
    spatn = SPATNModel(model_config).load(_require(args.spatn))
    generator = SPGNetModel(model_config).load(_require(args.spgnet))

    prefix = _flow_prefix(args.flow)
    _require(prefix + PHI_SUFFIX)
    _require(prefix + VIS_SUFFIX)
    flow = FlowField.load(prefix)
    source_image = Tensor(read_ppm(_require(args.source)))
    source_map = SemanticMap.read(_require(args.source_parsing), config["num_classes"])
    image, parsing = transfer(spatn, generator, config, source_image, source_map,
                              read_keypoints(_require(args.source_keypoints)),
                              read_keypoints(_require(args.target_keypoints)), flow)

    write_ppm(os.path.join(args.out, args.name + ".ppm"), image.data)
    parsing.write(os.path.join(args.out, args.name + ".pgm"))
    LOGGER.info("Wrote %s.ppm and %s.pgm to %s", args.name, args.name, args.out)


def evaluate(args):
    metrics = [name.strip() for name in args.metrics.split(",") if name.strip()]
    table = evaluate_directories(args.pred, args.truth, metrics, args.classes)
    if args.out:
        table.to_csv(args.out, index=False)
        LOGGER.info("Wrote metrics to %s", args.out)
    else:
        table.to_csv(sys.stdout, index=False)


def verify(args):
    table = run_suite(args.suite)
    if args.out:
        table.to_csv(args.out, index=False)
    failed = table.loc[~table["passed"], "check"].tolist()
    if failed:
        LOGGER.error("%i check(s) failed: %s", len(failed), ", ".join(failed))
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="spgnet", description="Two-stage person image generation on a "
                                     "numpy autodiff core.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-iteration detail")
    commands = parser.add_subparsers(dest="command", metavar="command")

    command = commands.add_parser("synth-data", help="generate synthetic stick-person pairs")
    command.add_argument("--n", type=int, default=500)
    command.add_argument("--size", type=int, default=64, choices=(32, 64, 128))
    command.add_argument("--classes", type=int, default=8)
    command.add_argument("--seed", type=int, default=int(os.environ.get("SPG_SEED") or 0))
    command.add_argument("--pairs-per-identity", type=int, default=4)
    command.add_argument("--crossed-fraction", type=float, default=0.2)
    command.add_argument("--out", required=True)
    command.set_defaults(handler=synth_data)

    command = commands.add_parser("pose-maps", help="heat maps and skeleton distance maps of a keypoint file")
    command.add_argument("--keypoints", required=True)
    command.add_argument("--size", type=int, default=64)
    command.add_argument("--sigma", type=float, default=None)
    command.add_argument("--kappa", type=float, default=KAPPA)
    command.add_argument("--no-distance-maps", action="store_true")
    command.add_argument("--out", required=True)
    command.set_defaults(handler=pose_maps)

    command = commands.add_parser("train-spatn", help="train the parsing transfer network")
    command.add_argument("--config")
    command.add_argument("--no-distance-maps", action="store_true")
    command.add_argument("--ablation", action="store_true", help="train with and without distance maps")
    command.add_argument("--set", action="append", metavar="KEY=VALUE")
    command.add_argument("--out", required=True)
    command.set_defaults(handler=train_spatn)

    command = commands.add_parser("train-spgnet", help="train the image generator")
    command.add_argument("--config")
    command.add_argument("--scheme", default="parallel", choices=SCHEMES + (ALL,))
    command.add_argument("--set", action="append", metavar="KEY=VALUE")
    command.add_argument("--out", required=True)
    command.set_defaults(handler=train_spgnet)

    command = commands.add_parser("infer", help="render a source person in a target pose")
    command.add_argument("--spatn", required=True)
    command.add_argument("--spgnet", required=True)
    command.add_argument("--source", required=True, help="source image (PPM)")
    command.add_argument("--source-parsing", required=True, help="source parsing (PGM)")
    command.add_argument("--source-keypoints", required=True)
    command.add_argument("--target-keypoints", required=True)
    command.add_argument("--flow", required=True, help="flow prefix or its .phi.spgt file")
    command.add_argument("--config", help="defaults to the sidecar of the SPGNet checkpoint")
    command.add_argument("--name", default="pred")
    command.add_argument("--out", required=True)
    command.set_defaults(handler=infer)

    command = commands.add_parser("eval", help="score predictions against ground truth")
    command.add_argument("--pred", required=True)
    command.add_argument("--truth", required=True)
    command.add_argument("--metrics", default=",".join(METRICS))
    command.add_argument("--classes", type=int, default=None)
    command.add_argument("--out", help="CSV path; stdout by default")
    command.set_defaults(handler=evaluate)

    command = commands.add_parser("check", help="run the verification suites")
    command.add_argument("--suite", default=ALL, choices=tuple(SUITES) + (ALL,))
    command.add_argument("--out", help="CSV report path")
    command.set_defaults(handler=verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format=LOG_FORMAT)
    try:
        return args.handler(args) or 0
    except (SpgError, OSError) as error:
        LOGGER.error("%s failed: %s", args.command, error)
        LOGGER.debug("Traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
