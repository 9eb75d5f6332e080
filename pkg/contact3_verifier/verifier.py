import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .calibration import CALIBRATION_MODEL, calibrate_kappa
from .database import RunHistory
from .exceptions import ConfigurationError, UnknownSuite, VerifierError
from .geometry.pipeline import ModelGeometry
from .library import describe_models, load_model
from .models import LOG_LEVELS, REPORT_FORMATS, SUITE_ORDER, Report, SuiteConfig
from .reporting import ReportGenerator
from .suites import SUITES, KernelSelfTestSuite, fd_crosscheck
from .utils import setup_logging

FD_REF = "forward-propagated derivatives against central differences"

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class ContactVerifier:
    """Runs verification suites on one model and emits the report"""

    def __init__(self, config: SuiteConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.reporter = ReportGenerator()
        self.history = RunHistory(config.history_path) if config.history_path else None
        self._geometry: Optional[ModelGeometry] = None
        self._kappa: Optional[float] = None

    @staticmethod
    def load_config(config_path: Optional[str] = None, **overrides: Any) -> SuiteConfig:
        """Settings from an optional JSON file; keyword overrides that are not None win"""
        values: Dict[str, Any] = {}
        if config_path:
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    values = json.load(f)
            except (OSError, ValueError) as e:
                raise ConfigurationError(f"Failed to load configuration {config_path}: {str(e)}") from e
            if not isinstance(values, dict):
                raise ConfigurationError(f"Configuration {config_path} must hold a JSON object")
        values.update({key: value for key, value in overrides.items() if value is not None})
        return SuiteConfig(**values)

    @property
    def geometry(self) -> ModelGeometry:
        if self._geometry is None:
            self._geometry = ModelGeometry(load_model(self.config.model))
        return self._geometry

    def calibrate(self) -> float:
        """kappa from the flat model, computed once per verifier"""
        if self._kappa is None:
            flat = self.geometry if self.config.model == CALIBRATION_MODEL else None
            self._kappa = calibrate_kappa(flat)
        return self._kappa

    def _requested_suites(self) -> List[str]:
        names = self.config.expanded_suites()
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise UnknownSuite(f"Unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITE_ORDER)} or all")
        return names

    async def run_suite(self) -> Report:
        """Run the configured suites in their fixed order and assemble the report"""
        names = self._requested_suites()
        geometry = self.geometry
        kappa = self.calibrate()

        self.logger.info(f"Verifying {self.config.model} with suites {', '.join(names)}")
        checks = []
        for name in names:
            suite = SUITES[name](geometry, self.config, kappa)
            checks.extend(await suite.run())

        report = Report.assemble(self.config.model, self.config.seed, kappa, checks)
        self.logger.info(f"{len(report.checks)} checks, {len(report.failing())} failing")
        return report

    async def fd_crosscheck(self) -> Report:
        """Standalone derivative cross-check section"""
        kappa = self.calibrate()
        suite = KernelSelfTestSuite(self.geometry, self.config, kappa)
        try:
            points, worst = fd_crosscheck(self.geometry, self.config.seed)
            checks = [suite.record("fd_crosscheck", FD_REF, points, worst, self.config.tol_fd)]
        except Exception as e:
            checks = suite.failed([("fd_crosscheck", FD_REF, self.config.tol_fd)], e)
        return Report.assemble(self.config.model, self.config.seed, kappa, checks)

    async def emit_report(self, report: Report) -> Optional[str]:
        """Write to the configured path, or stdout when none is set"""
        if self.config.out:
            return await self.reporter.emit(report, self.config.out, self.config.format)
        sys.stdout.write(await self.reporter.generate(report, self.config.format))
        sys.stdout.flush()
        return None

    async def verify(self) -> Report:
        report = await self.run_suite()
        await self.emit_report(report)
        if self.history is not None:
            try:
                await self.history.store_run(report, self.config.expanded_suites())
            except Exception as e:
                self.logger.error(f"Failed to store run history: {str(e)}")
        return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contact3-verifier",
        description="Numerical verification of complex contact to almost contact metric 3-structures",
    )
    parser.add_argument("--log-level", default=None, choices=LOG_LEVELS)
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="run verification suites on a model")
    verify.add_argument("--config", help="JSON file with the same keys as the flags")
    verify.add_argument("--model")
    verify.add_argument("--suite", dest="suites", help="suite name, comma separated list or all")
    verify.add_argument("--samples", type=int)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--tol-ad", dest="tol_ad", type=float)
    verify.add_argument("--tol-fd", dest="tol_fd", type=float)
    verify.add_argument("--out")
    verify.add_argument("--format", choices=REPORT_FORMATS)
    verify.add_argument("--history", dest="history_path", help="sqlite file recording each run")

    commands.add_parser("list-models", help="show the model library")
    commands.add_parser("calibrate", help="print the calibrated constant kappa")

    history = commands.add_parser("history", help="list recent recorded runs")
    history.add_argument("--history", dest="history_path", required=True)
    history.add_argument("--limit", type=int, default=10)
    return parser


async def _verify(args: argparse.Namespace) -> int:
    config = ContactVerifier.load_config(
        args.config,
        model=args.model,
        suites=args.suites,
        samples=args.samples,
        seed=args.seed,
        tol_ad=args.tol_ad,
        tol_fd=args.tol_fd,
        out=args.out,
        format=args.format,
        history_path=args.history_path,
        log_level=args.log_level,
    )
    setup_logging(config.log_level)
    verifier = ContactVerifier(config)
    report = await verifier.verify()
    return EXIT_PASS if report.passed else EXIT_FAILURE


async def _history(args: argparse.Namespace) -> int:
    runs = await RunHistory(args.history_path).get_recent_runs(args.limit)
    for run in runs:
        status = "pass" if run["pass"] else "FAIL"
        print(f"{run['run_id']}  {run['timestamp']}  {run['model']:<10} seed={run['seed']} "
              f"kappa={run['kappa']:g} {status}  {','.join(run['suites'])}")
    return EXIT_PASS


def _list_models() -> int:
    for summary in describe_models():
        print(f"{summary['name']:<10} dim {summary['base_dim']} -> {summary['bundle_dim']}, "
              f"{summary['charts']} chart(s): {summary['description']}")
    return EXIT_PASS


def _calibrate() -> int:
    print(f"kappa = {calibrate_kappa():g}")
    return EXIT_PASS


def run(argv: Optional[List[str]] = None) -> int:
    """Dispatch one command and map outcomes to exit codes"""
    args = _build_parser().parse_args(argv)
    logger = setup_logging(args.log_level or "INFO")
    try:
        if args.command == "verify":
            return asyncio.run(_verify(args))
        if args.command == "history":
            return asyncio.run(_history(args))
        if args.command == "list-models":
            return _list_models()
        return _calibrate()
    except (ConfigurationError, ValidationError) as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    except VerifierError as e:
        logger.error(f"Verification aborted: {str(e)}")
        return EXIT_FAILURE


def main():
    """Main entry point for the verifier"""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\nStopping verification...", file=sys.stderr)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
