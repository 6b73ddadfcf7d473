#!/usr/bin/env python3
"""
Salt cavern hydrogen storage potential - main application.

This module provides the entry point of the storage potential engine:
- StorageAnalysisApp: facade over scenario runs, input validation,
  run comparison and map export
- get_app(): lazily created global app instance
- main(): command-line interface with the subcommands
  run, diff, validate-inputs and export-map

Exit codes:
- 0: success
- 1: invalid configuration or inputs, runs on different datasets
- 2: any other failure
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pipeline.artifacts import export_map
from pipeline.compare import DiffReport, diff_scenarios
from pipeline.orchestrator import run_scenario
from scripts.errors import DatasetMismatchError, StageError, ValidationError
from scripts.load_data import (
    DepositLoader,
    load_demand_table,
    load_exclusion_manifest,
    load_layer_geometries,
    load_region_map,
)
from scripts.utilities.config import ScenarioConfig, load_config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


class StorageAnalysisApp:
    """
    Main storage potential application.

    Attributes:
        config (ScenarioConfig): Effective scenario configuration
    """

    def __init__(self, config: Optional[ScenarioConfig] = None):
        """
        Initialize the application.

        Args:
            config: Scenario configuration (defaults if None)
        """
        self.config = (config or load_config()).validate()
        logger.info("✓ Storage analysis app initialized")

    def run(self) -> Dict:
        """
        Run the configured scenario.

        Returns:
            Run summary (also written to summary.json)
        """
        return run_scenario(self.config)

    def validate_inputs(self) -> Dict:
        """
        Check all inputs without running the pipeline.

        Deposits are loaded leniently so every rejected feature is listed.

        Returns:
            Report with "valid", per-input counts and rejected deposits
        """
        c = self.config
        report: Dict = {"valid": True, "errors": []}

        try:
            c.check_inputs()
        except ValidationError as e:
            report["valid"] = False
            report["errors"].append(str(e))
            return report

        rejected: List[Dict] = []
        try:
            loader = DepositLoader(str(c.input_path("deposits")), strict=False)
            report["deposits"] = loader.get_statistics()
            rejected = loader.rejected
        except (ValidationError, FileNotFoundError) as e:
            report["valid"] = False
            report["errors"].append(f"deposits: {e}")
        report["rejected_deposits"] = rejected
        if rejected:
            report["valid"] = False

        def _layers():
            layers = load_exclusion_manifest(str(c.input_path("exclusions")))
            return [load_layer_geometries(layer) for layer in layers]

        checks = [
            ("exclusions", _layers),
            ("demand", lambda: load_demand_table(str(c.input_path("demand")))),
            ("regions", lambda: load_region_map(str(c.input_path("regions")), c.declared_regions)),
        ]
        for name, check in checks:
            try:
                result = check()
                report[name] = len(result)
            except (ValidationError, FileNotFoundError) as e:
                report["valid"] = False
                report["errors"].append(f"{name}: {e}")

        if report["valid"]:
            logger.info("✓ All inputs valid")
        else:
            logger.warning(f"⚠ Inputs invalid: {len(report['errors'])} errors, {len(rejected)} rejected deposits")
        return report

    def diff(self, run_a: str, run_b: str, out_path: Optional[str] = None) -> DiffReport:
        """Compare two finished runs."""
        return diff_scenarios(run_a, run_b, out_path)

    def export_map(self, run_dir: str, out_path: Optional[str] = None) -> str:
        """Write per-country map values of a run; returns the CSV path."""
        out_path = out_path or str(Path(run_dir) / "map_values.csv")
        export_map(run_dir, out_path)
        return out_path


# Global app instance (lazy loaded)
_app_instance: Optional[StorageAnalysisApp] = None


def get_app(config: Optional[ScenarioConfig] = None) -> StorageAnalysisApp:
    """
    Get or create the global app instance.

    Args:
        config: Scenario configuration; a new config replaces the instance

    Returns:
        StorageAnalysisApp instance
    """
    global _app_instance

    if _app_instance is None or (config is not None and config is not _app_instance.config):
        _app_instance = StorageAnalysisApp(config)

    return _app_instance


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saltcav",
        description="Hydrogen storage potential of salt caverns",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario")
    run.add_argument("--config", help="Scenario file (YAML or JSON)")
    run.add_argument("--case", choices=["guaranteed_only", "guaranteed_and_partial"], help="Geology case")
    run.add_argument("--separation", type=int, help="Cavern separation in diameters (3, 4, 5)")
    run.add_argument("--drilling", help="vertical or horizontal")
    run.add_argument("--resolution", type=float, help="Raster cell size in meters")
    run.add_argument("--fraction", type=float, help="Storage need as share of annual demand")
    run.add_argument("--out", help="Output directory")
    run.add_argument("--workers", type=int, help="Deposit-level worker processes")
    run.add_argument("--debug-masks", action="store_true", default=None, help="Write PGM eligibility masks")

    diff = sub.add_parser("diff", help="Compare two runs")
    diff.add_argument("run_a", help="Baseline run directory")
    diff.add_argument("run_b", help="Compared run directory")
    diff.add_argument("--out", help="Write the report as JSON")

    validate = sub.add_parser("validate-inputs", help="Check input files")
    validate.add_argument("--config", help="Scenario file (YAML or JSON)")

    export = sub.add_parser("export-map", help="Export per-country values for mapping tools")
    export.add_argument("run_dir", help="Run directory")
    export.add_argument("--out", help="CSV file (default: <run_dir>/map_values.csv)")

    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def error_report(error: Exception) -> Dict:
    """Structured description of a failure for stderr."""
    if isinstance(error, StageError):
        return {
            "error": type(error.cause).__name__,
            "message": str(error.cause),
            "stage": error.stage,
            "entity": error.entity,
        }
    return {"error": type(error).__name__, "message": str(error), "stage": None, "entity": None}


def exit_code(error: Exception) -> int:
    cause = error.cause if isinstance(error, StageError) else error
    if isinstance(cause, (ValidationError, DatasetMismatchError)):
        return 1
    return 2


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point.

    Args:
        argv: Arguments without the program name (sys.argv[1:] if None)

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        if args.command == "run":
            config = load_config(args.config).with_overrides(
                geology_case=args.case,
                separation_factor=args.separation,
                drilling=args.drilling,
                resolution_m=args.resolution,
                storage_fraction=args.fraction,
                output_dir=args.out,
                workers=args.workers,
                debug_masks=args.debug_masks,
            )
            summary = get_app(config).run()
            g = summary["global"]
            print(f"✓ {g['cavern_count']} caverns, {g['capacity_TWh']:.3f} TWh -> {config.output_dir}")

        elif args.command == "diff":
            report = get_app().diff(args.run_a, args.run_b, args.out)
            print(json.dumps(report.global_deltas, indent=2, sort_keys=True, default=str))

        elif args.command == "validate-inputs":
            report = get_app(load_config(args.config)).validate_inputs()
            print(json.dumps(report, indent=2, sort_keys=True, default=str))
            if not report["valid"]:
                return 1

        elif args.command == "export-map":
            path = get_app().export_map(args.run_dir, args.out)
            print(f"✓ Map values written to {path}")

    except Exception as e:
        code = exit_code(e)
        if code == 2:
            logger.error(f"Unexpected error: {e}", exc_info=args.verbose)
        else:
            logger.error(f"{e}")
        print(json.dumps(error_report(e), sort_keys=True), file=sys.stderr)
        return code

    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nInterrupted by user")
        sys.exit(2)
