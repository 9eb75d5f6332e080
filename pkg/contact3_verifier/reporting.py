import csv
import io
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict

import aiofiles
import jinja2

from .exceptions import IoFailure
from .models import REPORT_FORMATS, Report
from .utils import format_residual


class ReportGenerator:
    """Renders verification reports as json, html or csv"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.template_dir = Path(__file__).parent / "templates"
        self.template_env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(str(self.template_dir)),
            autoescape=jinja2.select_autoescape(["html", "xml"]),
        )
        self.template_env.filters["residual"] = format_residual

    async def generate(self, report: Report, format: str = "json") -> str:
        """Render a report in the specified format"""
        try:
            if format == "json":
                return await self._generate_json(report)
            elif format == "html":
                return await self._generate_html(report)
            elif format == "csv":
                return await self._generate_csv(report)
            else:
                raise ValueError(f"Unsupported format: {format}; choose from {', '.join(REPORT_FORMATS)}")
        except Exception as e:
            self.logger.error(f"Error generating {format} report: {str(e)}")
            raise

    async def emit(self, report: Report, path: str, format: str = "json") -> str:
        """Write the rendered report as UTF-8 and return the path"""
        content = await self.generate(report, format)
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
                await f.write(content)
        except OSError as e:
            self.logger.error(f"Failed to write report to {path}: {str(e)}")
            raise IoFailure(f"Cannot write report to {path}: {e}") from e
        self.logger.info(f"Wrote {format} report to {path}")
        return path

    async def _generate_json(self, report: Report) -> str:
        return report.to_json()

    async def _generate_html(self, report: Report) -> str:
        template = self.template_env.get_template("report.html")
        return template.render(**self._prepare_report_data(report))

    async def _generate_csv(self, report: Report) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["name", "paper_ref", "points", "max_residual", "threshold", "pass", "informational"])
        for check in report.checks:
            writer.writerow([
                check.name,
                check.paper_ref,
                check.points,
                repr(check.max_residual),
                repr(check.threshold),
                str(check.passed).lower(),
                str(check.informational).lower(),
            ])
        return output.getvalue()

    def _prepare_report_data(self, report: Report) -> Dict[str, Any]:
        """Checks grouped by suite, with pass/fail counts"""
        suites: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()
        for check in report.checks:
            entry = suites.setdefault(check.suite, {"checks": [], "passed": 0, "failed": 0, "informational": 0})
            entry["checks"].append(check)
            if check.informational:
                entry["informational"] += 1
            elif check.passed:
                entry["passed"] += 1
            else:
                entry["failed"] += 1

        return {
            "model": report.model,
            "seed": report.seed,
            "kappa": report.kappa,
            "passed": report.passed,
            "suites": suites,
            "statistics": {
                "total_checks": len(report.checks),
                "failed": len(report.failing()),
                "informational": len([c for c in report.checks if c.informational]),
            },
        }
