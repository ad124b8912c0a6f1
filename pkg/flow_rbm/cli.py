"""
Command-line front end.

Every subcommand reads and writes plain files: PGM/PPM frames, dataset
directories with a manifest, GRBM1 models and flow text. Exit codes are 0 on
success, 1 on a runtime failure and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from .config import (
    DatasetConfig,
    TrainConfig,
    create_dataset_config,
    create_train_config,
    load_config_file,
)
from .datagen import (
    ImagePair,
    PairKind,
    Scene,
    TransformKind,
    TransformLabel,
    dump_dataset,
    load_dataset,
    load_mnist_13,
    make_pairs,
    make_pairs_from_images,
    make_scene,
)
from .errors import FlowRBMError
from .flow import (
    DEFAULT_FLOW_RADIUS,
    RenderMode,
    analogy_reconstruct,
    local_flow_field,
    max_flow_field,
    modal_displacement_matches,
    render_factor_filters,
    render_flow,
)
from .imagecore import pgm_read, pgm_write
from .logging import Logger, logger
from .models import load_model
from .motion import (
    DEFAULT_MIN_CONSENSUS,
    DEFAULT_TOLERANCE,
    SegMask,
    angle_distance,
    classify_global_motion,
    estimate_rotation,
    mask_write,
    scene_iou,
    segment_foreground,
)
from .training import recon_error, train

TRAIN_OPTIONS: tuple[tuple[str, type], ...] = (
    ("factors", int),
    ("hidden", int),
    ("epochs", int),
    ("batch_size", int),
    ("learning_rate", float),
    ("momentum", float),
    ("target_hidden", float),
    ("sparsity_rate", float),
    ("weight_init_std", float),
    ("seed", int),
    ("threads", int),
)

DATASET_OPTIONS: tuple[tuple[str, type], ...] = (
    ("kind", str),
    ("n", int),
    ("size", int),
    ("density", float),
    ("seed", int),
)

# The train subcommand's --seed belongs to TrainConfig
TRAIN_DATASET_RENAME = {"seed": "data_seed"}

DEFAULT_ANGLE_TOLERANCE = 15.0
DEFAULT_RUN_DIR = "runs/latest"


def _field_help(model: type[BaseModel], name: str) -> str:
    field = model.model_fields[name]
    default = field.default
    if name == "sparsity_rate" and default is None:
        default = "0.1 * learning rate"
    elif isinstance(default, enum.Enum):
        default = default.value
    return f"{field.description} (default: {default})"


def _add_model_options(
    parser: argparse.ArgumentParser,
    model: type[BaseModel],
    options: Sequence[tuple[str, type]],
    rename: dict[str, str] | None = None,
) -> None:
    """Add one flag per config field; unset flags stay ``None`` so lower layers apply."""
    rename = rename or {}
    for name, type_ in options:
        dest = rename.get(name, name)
        kwargs: dict[str, Any] = {}
        if name == "kind":
            kwargs["choices"] = [kind.value for kind in PairKind]
        parser.add_argument(
            f"--{dest.replace('_', '-')}",
            dest=dest,
            type=type_,
            default=None,
            help=_field_help(model, name),
            **kwargs,
        )


def _overrides(
    args: argparse.Namespace,
    options: Sequence[tuple[str, type]],
    rename: dict[str, str] | None = None,
) -> dict[str, Any]:
    rename = rename or {}
    return {name: getattr(args, rename.get(name, name)) for name, _ in options}


def _int_tuple(count: int, what: str):
    def parse(value: str) -> tuple[int, ...]:
        try:
            parts = tuple(int(token) for token in value.split(","))
        except ValueError:
            parts = ()
        if len(parts) != count:
            raise argparse.ArgumentTypeError(f"{what} must be {count} comma-separated integers")
        return parts

    return parse


def _file_config(args: argparse.Namespace) -> dict[str, Any] | None:
    return load_config_file(args.config) if args.config else None


def _build_pairs(cfg: DatasetConfig, mnist: str | None, limit: int | None) -> list[ImagePair]:
    if mnist:
        images = load_mnist_13(mnist, limit if limit is not None else cfg.n)
        return make_pairs_from_images(images, cfg.kind, cfg.seed)
    return make_pairs(cfg.kind, cfg.n, cfg.size, cfg.density, cfg.seed)


def _read_pair(x_path: str, y_path: str) -> ImagePair:
    return ImagePair(x=pgm_read(x_path), y=pgm_read(y_path), label=TransformLabel.unknown())


def cmd_gen_pairs(args: argparse.Namespace) -> None:
    cfg = create_dataset_config(_file_config(args), _overrides(args, DATASET_OPTIONS))
    pairs = _build_pairs(cfg, args.mnist, args.limit)
    dump_dataset(pairs, args.out)
    print(f"Wrote {len(pairs)} {cfg.kind.value} pairs to {args.out}")


def cmd_gen_scene(args: argparse.Namespace) -> None:
    scene = make_scene(
        args.size, args.density, args.bg_shift, args.fg_rect, args.fg_shift, args.seed
    )
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    pgm_write(scene.pair.x, out / "x.pgm")
    pgm_write(scene.pair.y, out / "y.pgm")
    mask_write(SegMask(scene.truth_mask), out / "truth.pgm")
    print(f"Wrote scene to {out}")


def cmd_train(args: argparse.Namespace) -> None:
    file_config = _file_config(args)
    train_cfg = create_train_config(file_config, _overrides(args, TRAIN_OPTIONS))
    if args.data:
        dataset = load_dataset(args.data)
    else:
        data_cfg = create_dataset_config(
            file_config, _overrides(args, DATASET_OPTIONS, TRAIN_DATASET_RENAME)
        )
        dataset = _build_pairs(data_cfg, args.mnist, args.limit)

    report = train(
        dataset, train_cfg, checkpoint_dir=args.out, checkpoint_every=args.checkpoint_every
    )
    final = report.epoch_errors[-1] if report.epoch_errors else float("nan")
    print(f"Trained {report.epochs} epochs, final mse {final:.6f}; model in {args.out}")


def cmd_flow(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    flow = max_flow_field(model, _read_pair(args.x, args.y))
    render_flow(flow, args.out, args.mode)
    print(f"global motion: {classify_global_motion(flow, args.min_consensus)}")


def cmd_analogy(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    exemplar = _read_pair(args.exemplar_x, args.exemplar_y)
    output = analogy_reconstruct(model, exemplar, pgm_read(args.novel))
    pgm_write(output, args.out)
    print(f"Wrote analogy reconstruction to {args.out}")


def cmd_segment(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    pair = _read_pair(args.x, args.y)
    if args.global_flow:
        flow = max_flow_field(model, pair)
    else:
        flow = local_flow_field(model, pair, args.radius)
    gm = classify_global_motion(flow, args.min_consensus)
    mask = segment_foreground(flow, gm, args.tol)
    mask_write(mask, args.out)
    print(f"global motion: {gm}")
    if args.truth:
        scene = Scene(pair=pair, truth_mask=pgm_read(args.truth).grid() >= 0.5)
        print(f"iou {scene_iou(mask, scene, flow):.4f}")


def cmd_eval(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    pairs = load_dataset(args.data)
    if not pairs:
        raise ValueError(f"dataset {args.data} is empty")

    errors = [recon_error(model, pair) for pair in pairs]
    print(f"pairs {len(pairs)}")
    print(f"mse {float(np.mean(errors)):.6f}")

    shift_kinds = (TransformKind.TRANSLATION, TransformKind.IDENTITY)
    shifted = [p for p in pairs if p.label.kind in shift_kinds]
    if shifted:
        hits = [modal_displacement_matches(max_flow_field(model, p), p.label) for p in shifted]
        print(f"flow_accuracy {float(np.mean(hits)):.4f}")

    rotated = [p for p in pairs if p.label.kind is TransformKind.ROTATION]
    if rotated:
        hits = []
        for pair in rotated:
            flow = max_flow_field(model, pair)
            if not flow.active.any():
                hits.append(False)
                continue
            theta, _ = estimate_rotation(flow)
            hits.append(angle_distance(theta, pair.label.theta) <= args.angle_tol)
        print(f"rotation_accuracy {float(np.mean(hits)):.4f}")


def cmd_filters(args: argparse.Namespace) -> None:
    model = load_model(args.model)
    width, height = args.width, args.height
    if width is None or height is None:
        side = int(np.sqrt(model.n_input))
        if side * side != model.n_input:
            raise ValueError(
                f"{model.n_input} inputs are not a square frame; pass --width/--height"
            )
        width, height = width or side, height or side
    render_factor_filters(model, args.out, width, height)
    print(f"Wrote {model.n_factors} factor filters to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flow-rbm",
        description="Learn pixel motion between binary frames with a factored gated RBM",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log verbosity (default: INFO)",
    )
    parser.add_argument("--log-file", default=None, help="also log to this file (default: none)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    gen_pairs = sub.add_parser("gen-pairs", help="Generate a labelled pair dataset")
    _add_model_options(gen_pairs, DatasetConfig, DATASET_OPTIONS)
    _add_data_source_options(gen_pairs)
    gen_pairs.add_argument("--config", help="JSON config file with a 'dataset' section")
    gen_pairs.add_argument("--out", required=True, help="output dataset directory")
    gen_pairs.set_defaults(func=cmd_gen_pairs)

    gen_scene = sub.add_parser("gen-scene", help="Generate a pair with a moving foreground block")
    gen_scene.add_argument("--size", type=int, default=13, help="frame side (default: 13)")
    gen_scene.add_argument("--density", type=float, default=0.1, help="dot density (default: 0.1)")
    gen_scene.add_argument(
        "--bg-shift", type=_int_tuple(2, "bg-shift"), default=(1, 0),
        help="background dx,dy (default: 1,0)",
    )
    gen_scene.add_argument(
        "--fg-rect", type=_int_tuple(4, "fg-rect"), default=(4, 4, 4, 4),
        help="foreground block row,col,height,width (default: 4,4,4,4)",
    )
    gen_scene.add_argument(
        "--fg-shift", type=_int_tuple(2, "fg-shift"), default=(-1, 0),
        help="foreground dx,dy, given as --fg-shift=-1,0 (default: -1,0)",
    )
    gen_scene.add_argument("--seed", type=int, default=0, help="scene seed (default: 0)")
    gen_scene.add_argument("--out", required=True, help="directory for x.pgm, y.pgm, truth.pgm")
    gen_scene.set_defaults(func=cmd_gen_scene)

    train_p = sub.add_parser("train", help="Train a model with CD-1")
    _add_model_options(train_p, TrainConfig, TRAIN_OPTIONS)
    _add_model_options(train_p, DatasetConfig, DATASET_OPTIONS, TRAIN_DATASET_RENAME)
    _add_data_source_options(train_p)
    train_p.add_argument("--data", help="train on a dataset directory instead of generating one")
    train_p.add_argument("--config", help="JSON config file with 'train' and 'dataset' sections")
    train_p.add_argument(
        "--checkpoint-every", type=int, default=0,
        help="write a model checkpoint every N epochs, 0 disables (default: 0)",
    )
    train_p.add_argument(
        "--out", default=DEFAULT_RUN_DIR,
        help=f"directory for model.grbm and history.csv (default: {DEFAULT_RUN_DIR})",
    )
    train_p.set_defaults(func=cmd_train)

    flow_p = sub.add_parser("flow", help="Infer and render the max-flow field of a pair")
    _add_model_and_pair(flow_p)
    flow_p.add_argument(
        "--mode",
        choices=[mode.value for mode in RenderMode],
        default=RenderMode.ARROWS_TEXT.value,
        help="rendering (default: arrows_text)",
    )
    _add_min_consensus(flow_p)
    flow_p.add_argument("--out", required=True, help="output flow file")
    flow_p.set_defaults(func=cmd_flow)

    analogy = sub.add_parser("analogy", help="Apply an exemplar's transform to a new frame")
    analogy.add_argument("--model", required=True, help="GRBM1 model file")
    analogy.add_argument("--exemplar-x", required=True, help="exemplar previous frame (PGM)")
    analogy.add_argument("--exemplar-y", required=True, help="exemplar current frame (PGM)")
    analogy.add_argument("--novel", required=True, help="frame to transform (PGM)")
    analogy.add_argument("--out", required=True, help="output PGM")
    analogy.set_defaults(func=cmd_analogy)

    segment = sub.add_parser("segment", help="Segment foreground against the global motion")
    _add_model_and_pair(segment)
    segment.add_argument(
        "--tol", type=float, default=DEFAULT_TOLERANCE,
        help=f"pixels of deviation still counted as background (default: {DEFAULT_TOLERANCE})",
    )
    segment.add_argument(
        "--radius", type=int, default=DEFAULT_FLOW_RADIUS,
        help=f"window radius for per-pixel flow inference (default: {DEFAULT_FLOW_RADIUS})",
    )
    segment.add_argument(
        "--global-flow", action="store_true",
        help="infer one set of mapping units from the whole frame instead",
    )
    _add_min_consensus(segment)
    segment.add_argument("--truth", help="truth mask PGM; prints the IoU when given")
    segment.add_argument("--out", required=True, help="output mask PGM")
    segment.set_defaults(func=cmd_segment)

    eval_p = sub.add_parser("eval", help="Score a model on a labelled dataset directory")
    eval_p.add_argument("--model", required=True, help="GRBM1 model file")
    eval_p.add_argument("--data", required=True, help="dataset directory")
    eval_p.add_argument(
        "--angle-tol", type=float, default=DEFAULT_ANGLE_TOLERANCE,
        help=f"degrees counted as a correct rotation (default: {DEFAULT_ANGLE_TOLERANCE:g})",
    )
    eval_p.set_defaults(func=cmd_eval)

    filters = sub.add_parser("filters", help="Render a model's factor filters")
    filters.add_argument("--model", required=True, help="GRBM1 model file")
    filters.add_argument("--width", type=int, default=None, help="frame width (default: square)")
    filters.add_argument("--height", type=int, default=None, help="frame height (default: square)")
    filters.add_argument("--out", required=True, help="output PGM")
    filters.set_defaults(func=cmd_filters)

    return parser


def _add_data_source_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mnist", help="IDX3 image file; pairs MNIST digits instead of dots")
    parser.add_argument("--limit", type=int, default=None, help="MNIST digits to use (default: n)")


def _add_model_and_pair(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="GRBM1 model file")
    parser.add_argument("--x", required=True, help="previous frame (PGM)")
    parser.add_argument("--y", required=True, help="current frame (PGM)")


def _add_min_consensus(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--min-consensus", type=float, default=DEFAULT_MIN_CONSENSUS,
        help=f"consensus below which motion is unknown (default: {DEFAULT_MIN_CONSENSUS})",
    )


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or error.title
    return f"invalid {location}: {first['msg']}"


def dispatch(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the selected subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    Logger.configure(level=args.log_level, log_to_file=args.log_file)
    try:
        args.func(args)
    except ValidationError as e:
        logger.error(_describe(e))
        return 2
    except (FlowRBMError, OSError, ValueError) as e:
        logger.error(f"{args.cmd} failed: {e}")
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
