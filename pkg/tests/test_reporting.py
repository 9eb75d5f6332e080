import asyncio
import csv
import io
import json

import pytest

from contact3_verifier.exceptions import IoFailure
from contact3_verifier.models import Report
from contact3_verifier.reporting import ReportGenerator


@pytest.fixture
def report():
    return Report.assemble("flat3", 42, 1.0, [
        {"name": "theorem1.kuo_relations", "paper_ref": "Theorem 1 (2)", "points": 100,
         "max_residual": 3e-15, "threshold": 1e-7, "pass": True, "informational": False},
        {"name": "corollary2.sasaki_killing", "paper_ref": "Corollary 2", "points": 100,
         "max_residual": 0.25, "threshold": 1e-5, "pass": False, "informational": True},
        {"name": "corollary3.curvature_pullback", "paper_ref": "Corollary 3", "points": 0,
         "max_residual": -1.0, "threshold": 1e-6, "pass": False, "informational": True},
    ])


def test_json_is_the_report_serialization(report):
    text = asyncio.run(ReportGenerator().generate(report, "json"))
    assert text == report.to_json()
    assert json.loads(text)["model"] == "flat3"


def test_csv_lists_every_check(report):
    text = asyncio.run(ReportGenerator().generate(report, "csv"))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["name", "paper_ref", "points", "max_residual", "threshold", "pass", "informational"]
    assert [row[0] for row in rows[1:]] == [c.name for c in report.checks]
    assert rows[2][5:] == ["false", "true"]


def test_html_groups_checks_by_suite(report):
    text = asyncio.run(ReportGenerator().generate(report, "html"))
    assert "<h2>theorem1</h2>" in text
    assert "<h2>corollary2</h2>" in text
    assert "n/a" in text
    assert "PASS" in text


def test_unsupported_format(report):
    with pytest.raises(ValueError):
        asyncio.run(ReportGenerator().generate(report, "pdf"))


def test_emit_writes_utf8(report, tmp_path):
    path = tmp_path / "out" / "report.json"
    written = asyncio.run(ReportGenerator().emit(report, str(path), "json"))
    assert written == str(path)
    assert path.read_bytes() == report.to_json().encode("utf-8")


def test_emit_into_a_file_path_fails(report, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(IoFailure):
        asyncio.run(ReportGenerator().emit(report, str(blocker / "report.json")))
