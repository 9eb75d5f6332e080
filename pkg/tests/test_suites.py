"""Suite verdicts per model at reduced sample counts."""
import asyncio
import math
import time

import jax.numpy as jnp
import pytest

from contact3_verifier.geometry.kernel import field_map
from contact3_verifier.geometry.pipeline import ModelGeometry
from contact3_verifier.library import load_model
from contact3_verifier.models import NOT_EVALUATED, Report
from contact3_verifier.suites import SUITES, VerificationSuite, base
from contact3_verifier.suites.base import NONVANISHING_FLOOR

KAPPA = 1.0


def run_suite(name, geometry, config):
    checks = asyncio.run(SUITES[name](geometry, config, KAPPA).run())
    return Report.assemble(config.model, config.seed, KAPPA, checks)


def assert_mandatory_pass(report):
    failing = [(c.name, c.max_residual, c.threshold) for c in report.failing()]
    assert failing == []
    assert report.passed


def test_suite_registry_follows_execution_order():
    assert list(SUITES) == ["theorem1", "corollary1", "corollary2", "corollary3", "corollary4", "kernel-selftest"]


@pytest.mark.parametrize("name", ["theorem1", "corollary1", "corollary4", "kernel-selftest"])
def test_flat_model_passes(flat3, make_config, name):
    report = run_suite(name, flat3, make_config())
    assert report.checks
    assert all(c.name.startswith(f"{name}.") for c in report.checks)
    assert all(c.paper_ref for c in report.checks)
    assert_mandatory_pass(report)


def test_theorem1_covers_the_headline_checks(flat3, make_config):
    names = {c.name for c in run_suite("theorem1", flat3, make_config()).checks}
    for expected in ("almost_contact_1", "almost_contact_2", "almost_contact_3", "kuo_relations",
                     "r1_123", "r1_231", "r1_312", "normality_phi1", "contact_metric_2", "contact_metric_3",
                     "killing_xi1", "volume_equality", "volume_min_magnitude"):
        assert f"theorem1.{expected}" in names
    assert not any(".transition_" in name for name in names)


def test_corollary2_is_informational_on_the_flat_model(flat3, make_config):
    report = run_suite("corollary2", flat3, make_config())
    assert report.checks
    assert all(c.informational for c in report.checks)
    assert report.passed


def test_failed_group_is_recorded_as_not_evaluated(flat3, make_config):
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    records = suite.failed([("broken", "Theorem 1", 1e-7), ("also_broken", "Theorem 1", 1e-6)],
                           RuntimeError("boom"))
    assert [r["name"] for r in records] == ["suite.broken", "suite.also_broken"]
    assert all(r["max_residual"] == NOT_EVALUATED and r["points"] == 0 and not r["pass"] for r in records)


def test_lower_bound_records(flat3, make_config):
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    assert suite.record_lower_bound("volume", "Theorem 1", 10, 0.5)["pass"]
    assert not suite.record_lower_bound("volume", "Theorem 1", 10, 0.0)["pass"]
    assert not suite.record_lower_bound("volume", "Theorem 1", 10, math.inf)["pass"]
    assert suite.record_lower_bound("volume", "Theorem 1", 10, 0.5)["threshold"] == NONVANISHING_FLOOR


def test_record_threshold_is_inclusive(flat3, make_config):
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    assert suite.record("edge", "Theorem 1", 1, 1e-7, 1e-7)["pass"]
    assert not suite.record("edge", "Theorem 1", 1, 2e-7, 1e-7)["pass"]


def test_group_check_counts_each_point_once(flat3, make_config, flat_bundle_samples):
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    etas = flat3.triple.etas
    zero = [field_map(lambda e: 0.0 * e, eta, valence=(0, 1), name="zero") for eta in etas]
    entry = suite.group_check("zeros", "Theorem 1", zero, flat_bundle_samples, 1e-7)
    assert entry["points"] == sum(s.count for s in flat_bundle_samples)
    assert entry["pass"]


def test_group_check_rejects_mismatched_point_counts(flat3, make_config, flat_bundle_samples, monkeypatch):
    counts = iter([10, 20])
    monkeypatch.setattr(base, "max_norm", lambda field, samples: (next(counts), 0.0))
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    with pytest.raises(ValueError, match="different point counts"):
        suite.group_check("mismatch", "Theorem 1", list(flat3.triple.etas[:2]), flat_bundle_samples, 1e-7)


def test_group_check_does_not_hide_nan(flat3, make_config, flat_bundle_samples):
    suite = VerificationSuite(flat3, make_config(), KAPPA)
    eta = flat3.triple.etas[0]
    fields = [field_map(lambda e: 0.0 * e, eta, valence=(0, 1), name="zero"),
              field_map(lambda e: e * jnp.nan, eta, valence=(0, 1), name="nan")]
    entry = suite.group_check("nan", "Theorem 1", fields, flat_bundle_samples, 1e-7)
    assert entry["max_residual"] == NOT_EVALUATED
    assert not entry["pass"]


def test_curvature_normalization_runs_on_the_base(flat3, make_config):
    config = make_config()
    checks = {c.name: c for c in run_suite("corollary3", flat3, config).checks}
    normalization = checks["corollary3.curvature_normalization"]
    assert normalization.points == sum(s.count for s in flat3.base_samples(config.samples, config.seed))
    assert normalization.passed


@pytest.mark.parametrize("name", ["theorem1", "corollary1"])
def test_verdicts_do_not_depend_on_the_seed(flat3, make_config, name):
    verdicts = []
    for seed in range(5):
        report = run_suite(name, flat3, make_config(seed=seed))
        verdicts.append({c.name: c.passed for c in report.checks})
    assert verdicts[0]
    assert all(v == verdicts[0] for v in verdicts[1:])


@pytest.mark.slow
def test_theorem1_flat_model_at_full_sample_count(make_config):
    """A fresh model, so that construction and compilation are timed too"""
    geometry = ModelGeometry(load_model("flat3"))
    config = make_config(samples=100, seed=42)
    start = time.perf_counter()
    report = run_suite("theorem1", geometry, config)
    elapsed = time.perf_counter() - start
    assert_mandatory_pass(report)
    assert elapsed < 30.0


@pytest.mark.slow
@pytest.mark.parametrize("name", ["theorem1", "corollary2", "corollary3", "corollary4"])
def test_projective_model_passes(cp3, make_config, name):
    report = run_suite(name, cp3, make_config("cp3"))
    assert not any(c.informational for c in report.checks)
    assert_mandatory_pass(report)


@pytest.mark.slow
def test_cotangent_cone_map(cotangent, make_config):
    report = run_suite("corollary4", cotangent, make_config("cotangent"))
    names = {c.name for c in report.checks}
    assert {"corollary4.liouville_form", "corollary4.cone_map_holomorphic"} <= names
    assert_mandatory_pass(report)
