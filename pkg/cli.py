# cli.py
# RoBus Batch Command Line
# python cli.py <subcommand> [--config path] [--out dir] [--set key=value ...]

import argparse
import logging
import sys
from pathlib import Path

from config.app_config import AppConfig, PipelineConfig
from utils.blocks import assign_buildings_to_blocks
from utils.errors import ConfigurationError, MissingInputError, RobusError, StageError
from utils.export import read_geojson_blocks, read_geojson_buildings, read_graph_json, read_raster
from utils.logging_utils import configure_logging
from utils.metrics import block_building_stats, compute_report, validity
from utils.pipeline_runner import STAGES, PipelineRunner
from utils.raster import road_mask

logger = logging.getLogger("robus.cli")

STAGE_COMMANDS = {
    "ingest": ("ingest",),
    "rasterize": ("rasterize",),
    "graph": ("graph",),
    "blocks": ("blocks",),
    "heights": ("heights",),
    "label": ("label",),
    "export-xodr": ("export",),
    "pipeline": STAGES,
}

EXIT_OK = 0
EXIT_STAGE_FAILED = 1
EXIT_MISSING_INPUT = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="robus", description=AppConfig.APP_DESCRIPTION)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline JSON config (defaults to config/pipeline.json)")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config value; repeatable, dotted keys reach thresholds")
    common.add_argument("--log-level", default=AppConfig.LOG_LEVEL)

    for name in STAGE_COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run {' -> '.join(STAGE_COMMANDS[name])}")

    metrics = sub.add_parser("metrics", parents=[common], help="compare two layouts and print a metrics report")
    metrics.add_argument("--graph", required=True, help="road graph JSON under evaluation")
    metrics.add_argument("--ref", help="reference road graph JSON")
    metrics.add_argument("--raster", help="raster container whose road mask is evaluated")
    metrics.add_argument("--ref-raster", help="reference raster container")
    metrics.add_argument("--buildings", help="buildings GeoJSON under evaluation")
    metrics.add_argument("--ref-buildings", help="reference buildings GeoJSON")
    metrics.add_argument("--blocks", help="blocks GeoJSON matching --buildings")
    metrics.add_argument("--ref-blocks", help="blocks GeoJSON matching --ref-buildings")
    return parser


def load_config(args):
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output_dir={args.out}")
    return PipelineConfig.from_file(args.config, overrides)


def _read(path, label):
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"{label} not found: {path}")
    return path.read_bytes()


def _block_stats(blocks_path, buildings):
    """Block statistics with buildings reassigned to the given blocks"""
    blocks = read_geojson_blocks(_read(blocks_path, "blocks"))
    assigned = assign_buildings_to_blocks(buildings, blocks)
    return assigned.blocks, block_building_stats(assigned.blocks, buildings)


def run_metrics(args, config):
    graph = read_graph_json(_read(args.graph, "graph"))
    reference_graph = read_graph_json(_read(args.ref, "reference graph")) if args.ref else None

    raster = read_raster(_read(args.raster, "raster")) if args.raster else None
    reference_raster = read_raster(_read(args.ref_raster, "reference raster")) if args.ref_raster else None
    mask = road_mask(raster) if raster is not None else None
    reference_mask = road_mask(reference_raster) if reference_raster is not None else None

    buildings = read_geojson_buildings(_read(args.buildings, "buildings")) if args.buildings else None
    reference_buildings = (read_geojson_buildings(_read(args.ref_buildings, "reference buildings"))
                           if args.ref_buildings else None)

    blocks = block_stats = reference_block_stats = None
    if args.blocks and buildings:
        blocks, block_stats = _block_stats(args.blocks, buildings)
    if args.ref_blocks and reference_buildings:
        _, reference_block_stats = _block_stats(args.ref_blocks, reference_buildings)

    report = compute_report(
        graph=graph, reference_graph=reference_graph,
        mask=mask, reference_mask=reference_mask,
        buildings=buildings, reference_buildings=reference_buildings,
        block_stats=block_stats, reference_block_stats=reference_block_stats,
        config=config,
    )

    if blocks and mask is not None:
        by_id = {b.id: b for b in buildings}
        total = invalid = 0.0
        for block in blocks:
            members = [by_id[i] for i in block.buildings if i in by_id]
            if members:
                invalid += validity(members, block.boundary, mask, raster.transform) * len(members) / 100.0
                total += len(members)
        report.validity_pct = 100.0 * invalid / total if total else 0.0

    sys.stdout.write(report.to_json())
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        config = load_config(args)
        if args.command == "metrics":
            return run_metrics(args, config)
        runner = PipelineRunner(config)
        for stage in STAGE_COMMANDS[args.command]:
            runner.run_stage(stage)
    except (MissingInputError, ConfigurationError) as e:
        logger.error("input error", extra={"context": {"command": args.command, "error": str(e)}})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STAGE_FAILED
    except RobusError as e:
        logger.error("command failed", extra={"context": {"command": args.command, "error": str(e)}})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STAGE_FAILED

    logger.info("command finished", extra={"context": {"command": args.command, "out": str(config.output_dir)}})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
