import asyncio
import json

import pytest

from contact3_verifier import verifier as verifier_module
from contact3_verifier.calibration import calibrate_kappa
from contact3_verifier.exceptions import CalibrationFailure, ConfigurationError, UnknownModel, UnknownSuite
from contact3_verifier.suites import SUITES, VerificationSuite
from contact3_verifier.verifier import EXIT_CONFIG, EXIT_FAILURE, EXIT_PASS, ContactVerifier, run


class AlwaysFailing(VerificationSuite):
    name = "theorem1"

    async def run(self):
        return [self.record("forced", "Theorem 1", 1, 1.0, 1e-7)]


class TestConfiguration:
    def test_flags_override_the_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"model": "cp3", "samples": 20, "seed": 3}))
        config = ContactVerifier.load_config(str(path), model="flat3", samples=None, seed=5)
        assert (config.model, config.samples, config.seed) == ("flat3", 20, 5)

    @pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
    def test_unreadable_config(self, tmp_path, content):
        path = tmp_path / "config.json"
        path.write_text(content)
        with pytest.raises(ConfigurationError):
            ContactVerifier.load_config(str(path))

    def test_missing_config(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ContactVerifier.load_config(str(tmp_path / "absent.json"))


class TestCalibration:
    def test_flat_model_selects_one(self, flat3):
        assert calibrate_kappa(flat3) == 1.0

    def test_perturbed_metric_fits_neither(self, flat3):
        with pytest.raises(CalibrationFailure):
            calibrate_kappa(flat3, perturbation=lambda g: 1.5 * g)

    def test_stable_across_seeds(self, make_config):
        assert {ContactVerifier(make_config(seed=seed)).calibrate() for seed in range(5)} == {1.0}


class TestRunSuite:
    def test_unknown_suite(self, make_config):
        with pytest.raises(UnknownSuite):
            asyncio.run(ContactVerifier(make_config(suites="corollary9")).run_suite())

    def test_unknown_model(self, make_config):
        with pytest.raises(UnknownModel):
            asyncio.run(ContactVerifier(make_config(model="hopf", suites="theorem1")).run_suite())

    def test_fd_crosscheck_section(self, make_config):
        report = asyncio.run(ContactVerifier(make_config()).fd_crosscheck())
        assert [c.name for c in report.checks] == ["kernel-selftest.fd_crosscheck"]
        assert report.checks[0].points == 200
        assert report.passed

    def test_report_goes_to_stdout_without_path(self, make_config, capsys):
        verifier = ContactVerifier(make_config(suites="kernel-selftest"))
        report = asyncio.run(verifier.verify())
        assert capsys.readouterr().out == report.to_json()


class TestCommandLine:
    def test_theorem1_on_flat_model_is_deterministic(self, tmp_path):
        outputs = []
        for name in ("first.json", "second.json"):
            out = tmp_path / name
            code = run(["verify", "--model", "flat3", "--suite", "theorem1", "--samples", "10", "--out", str(out)])
            assert code == EXIT_PASS
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        data = json.loads(outputs[0])
        assert data["model"] == "flat3"
        assert data["kappa"] == 1.0
        assert data["pass"] is True

    def test_history_is_recorded(self, tmp_path, capsys):
        db = str(tmp_path / "runs.sqlite")
        code = run(["verify", "--model", "flat3", "--suite", "kernel-selftest", "--samples", "10",
                    "--out", str(tmp_path / "r.csv"), "--format", "csv", "--history", db])
        assert code == EXIT_PASS
        capsys.readouterr()
        assert run(["history", "--history", db]) == EXIT_PASS
        assert "flat3" in capsys.readouterr().out

    def test_failing_check_exits_one(self, tmp_path, monkeypatch):
        monkeypatch.setitem(SUITES, "theorem1", AlwaysFailing)
        code = run(["verify", "--model", "flat3", "--suite", "theorem1", "--out", str(tmp_path / "r.json")])
        assert code == EXIT_FAILURE
        assert json.loads((tmp_path / "r.json").read_text())["pass"] is False

    @pytest.mark.parametrize("argv", [
        ["verify", "--model", "hopf"],
        ["verify", "--model", "flat3", "--suite", "corollary9"],
        ["verify", "--model", "flat3", "--samples", "5"],
        ["verify", "--model", "flat3", "--tol-fd", "0"],
        ["verify"],
    ])
    def test_configuration_errors_exit_two(self, argv):
        assert run(argv) == EXIT_CONFIG

    def test_config_file_error_exits_two(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"model": "flat3", "colour": "blue"}))
        assert run(["verify", "--config", str(path)]) == EXIT_CONFIG

    def test_list_models(self, capsys):
        assert run(["list-models"]) == EXIT_PASS
        out = capsys.readouterr().out
        for name in ("flat3", "cp3", "cotangent", "flat5"):
            assert name in out

    def test_calibrate(self, capsys):
        assert run(["calibrate"]) == EXIT_PASS
        assert "kappa = 1" in capsys.readouterr().out

    def test_keyboard_interrupt_exits_one(self, monkeypatch):
        def interrupted(argv=None):
            raise KeyboardInterrupt

        monkeypatch.setattr(verifier_module, "run", interrupted)
        with pytest.raises(SystemExit) as exit_info:
            verifier_module.main()
        assert exit_info.value.code == EXIT_FAILURE
