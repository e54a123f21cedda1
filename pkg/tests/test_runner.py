import csv
import io
import json

import numpy as np
import pytest

from finsler_lab.errors import ConfigError, SamplingError
from finsler_lab.profiles import funk
from finsler_lab.runner import FLAGS, config_from_dict, draw_samples, emit_report, exit_code, parse_config, run_suites
from finsler_lab.runner.cli import main
from finsler_lab.runner.report import CSV_HEADER, format_real
from finsler_lab.spray import fundamental_tensor


class TestConfig:
    def test_defaults(self):
        cfg = parse_config('{"metric": "euclidean", "n": 3, "samples": 50, "seed": 7}')
        assert (cfg.n, cfg.samples, cfg.seed) == (3, 50, 7)
        assert cfg.tolerance_zero == 1e-9 and cfg.threshold_nonzero == 1e-3
        assert cfg.k1 == "scan" and cfg.c == "scan" and cfg.suites == ("classify",)

    def test_funk_range_accepted(self):
        cfg = parse_config('{"metric": "funk", "r_range": [0.2, 0.9]}')
        assert cfg.effective_r_range() == (0.2, 0.9)

    def test_range_clipped_to_domain(self):
        lo, hi = config_from_dict({"metric": "funk", "r_range": [0.2, 1.5]}).effective_r_range()
        assert lo == 0.2 and hi < 1.0

    @pytest.mark.parametrize("doc, code", [
        ({"metric": "nope"}, "unknown_metric"),
        ({"psi": "1"}, "unknown_key"),
        ({"metric": {"psi": "sqrt(1 + s^2"}}, "malformed_expression"),
        ({"metric": {"psi": "1 + q*s"}}, "malformed_expression"),
        ({"metric": "funk", "r_range": [0.0, 0.5]}, "invalid_r_range"),
        ({"metric": "funk", "r_range": [-0.1, 0.5]}, "invalid_r_range"),
        ({"metric": "funk", "r_range": [0.5, 0.2]}, "invalid_r_range"),
        ({"metric": "funk", "r_range": [1.2, 1.5]}, "invalid_r_range"),
        ({"metric": "funk", "tolerance_zero": 1e-2}, "tolerance_order"),
        ({"metric": "funk", "n": 7}, "invalid_value"),
        ({"metric": "funk", "k_fn": "1/(1-"}, "malformed_expression"),
        ({"metric": {"name": "riemann_sqrt", "k2": "1"}}, "malformed_expression"),
    ])
    def test_error_codes(self, doc, code):
        with pytest.raises(ConfigError) as info:
            config_from_dict(doc)
        assert info.value.code == code

    def test_unknown_metric_message(self):
        with pytest.raises(ConfigError, match="unknown metric"):
            parse_config('{"metric": "nope"}')

    def test_malformed_document(self):
        with pytest.raises(ConfigError) as info:
            parse_config("{metric: funk")
        assert info.value.code == "malformed_document"

    def test_to_dict_round_trip(self):
        doc = {"metric": {"name": "riemann_sqrt", "k2": "1 + a*r^2", "k": "a", "params": {"a": 0.5}},
               "n": 4, "samples": 12, "seed": 3, "r_range": [0.05, 0.8], "k1": 0.0, "c": "scan",
               "k_fn": "a", "suites": ["rigidity", "classify"]}
        cfg = config_from_dict(doc)
        assert config_from_dict(cfg.to_dict()) == cfg


class TestSampling:
    def test_determinism(self):
        cfg = config_from_dict({"metric": "klein", "samples": 20, "seed": 7})
        a, b = draw_samples(cfg), draw_samples(cfg)
        assert all(np.array_equal(p.x, q.x) and np.array_equal(p.y, q.y) for p, q in zip(a, b))
        other = draw_samples(config_from_dict({"metric": "klein", "samples": 20, "seed": 8}))
        assert not np.array_equal(a[0].x, other[0].x)

    def test_construction(self):
        cfg = config_from_dict({"metric": "sqrt_one_plus_s2", "samples": 40, "seed": 1, "r_range": [0.1, 0.6]})
        for p in draw_samples(cfg):
            assert 0.1 <= p.r <= 0.6 and abs(p.s) <= p.r + 1e-15
            assert 0.5 - 1e-12 <= np.linalg.norm(p.y) <= 2 + 1e-12

    def test_funk_domain(self):
        cfg = config_from_dict({"metric": "funk", "samples": 30, "r_range": [0.2, 0.9]})
        for p in draw_samples(cfg):
            assert 0.2 <= p.r < 1
            assert fundamental_tensor(funk().metric(), p).positive_definite

    def test_domain_too_small(self):
        # psi = s - r/2 has psi - s psi_s + (r^2 - s^2) psi_ss = -r/2 < 0 everywhere
        cfg = config_from_dict({"metric": {"psi": "s - r/2"}, "samples": 20})
        with pytest.raises(SamplingError, match="metric domain too small for sampling"):
            draw_samples(cfg)


def _flags(report):
    return {f["flag"]: f for f in report["flags"]}


class TestSuites:
    def test_euclidean_classify(self):
        report = run_suites(config_from_dict({"metric": "euclidean", "samples": 20}))
        flags = _flags(report)
        assert set(flags) == set(FLAGS)
        assert all(f["verdict"] == "holds" and f["residual_max"] <= 1e-12 for f in flags.values())
        assert exit_code(report) == 0

    def test_funk_rigidity(self):
        report = run_suites(config_from_dict({"metric": "funk", "samples": 20,
                                              "suites": ["classify", "rigidity"]}))
        fc = report["fitted_constants"]
        assert fc["k1"]["value"] == pytest.approx(1.0, abs=1e-8)
        assert fc["c"]["value"] == pytest.approx(0.5, abs=1e-8)
        rig = report["rigidity"]
        assert rig["riemannian"]["verdict"] == "fails"
        assert rig["degenerate_2c_minus_k1"]
        assert any(note.startswith("degenerate: 2c - k1") for note in rig["notes"])
        assert rig["residuals"]["2star"] <= 1e-9
        assert exit_code(report) == 1

    def test_sqrt_one_plus_s2_validate(self):
        report = run_suites(config_from_dict({"metric": "sqrt_one_plus_s2", "samples": 20,
                                              "suites": ["classify", "validate"]}))
        for row in report["cross_validation"]:
            if row["quantity"] not in ("spray_fd", "berwald_scalar_vs_tensor"):
                assert row["max_deviation"] <= 1e-9, row["quantity"]
        flags = _flags(report)
        assert flags["berwald"]["verdict"] == "holds"
        assert flags["projectively_flat"]["verdict"] == "fails"

    def test_klein_endpoint(self):
        report = run_suites(config_from_dict({"metric": "klein", "samples": 10, "suites": ["rigidity"],
                                              "k_fn": "1/(1-r^2)", "k2_fn": "1/sqrt(1-r^2)"}))
        rig = report["rigidity"]
        assert max(rig["residuals"].values()) <= 1e-9
        assert rig["endpoint"]["max_deviation"] <= 1e-14
        assert rig["chain_consistent"]

    def test_witnesses_sorted(self):
        report = run_suites(config_from_dict({"metric": "funk", "samples": 10}))
        w = _flags(report)["berwald"]["witnesses"]
        assert len(w) == 3
        assert [v["residual"] for v in w] == sorted((v["residual"] for v in w), reverse=True)


class TestReport:
    def test_format_real(self):
        assert format_real(0.1) == "0.10000000000000001"
        assert format_real(2.0) == "2.0"
        assert format_real(float("nan")) == "null"

    def test_csv_row_count(self):
        report = run_suites(config_from_dict({"metric": "klein", "samples": 8,
                                              "suites": ["classify", "validate"]}))
        rows = list(csv.reader(io.StringIO(emit_report(report, "csv").decode())))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) - 1 == len(report["flags"]) + len(report["cross_validation"])

    def test_config_echo_round_trip(self):
        cfg = config_from_dict({"metric": "funk", "samples": 5, "seed": 11, "c": 0.5})
        report = run_suites(cfg)
        echo = json.loads(emit_report(report).decode())["config"]
        assert parse_config(json.dumps(echo)) == cfg

    def test_worker_determinism(self):
        cfg = config_from_dict({"metric": "funk", "samples": 12, "suites": ["classify", "validate", "rigidity"]})
        assert emit_report(run_suites(cfg, workers=1)) == emit_report(run_suites(cfg, workers=4))
        assert emit_report(run_suites(cfg, workers=1), "csv") == emit_report(run_suites(cfg, workers=3), "csv")


class TestCli:
    def test_catalog(self, capsys):
        assert main(["catalog"]) == 0
        out = capsys.readouterr().out
        assert "funk" in out and "riemann_sqrt" in out

    def test_exit_zero_and_out_file(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["classify", "--metric", "euclidean", "--samples", "5", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["consistent"] is True

    def test_exit_one(self, capsys):
        assert main(["classify", "--metric", "funk", "--samples", "5"]) == 1
        assert json.loads(capsys.readouterr().out)["consistent"] is False

    @pytest.mark.parametrize("argv", [
        ["classify", "--metric", "nope"],
        ["classify", "--psi", "sqrt(1 +"],
        ["classify", "--metric", "funk", "--tolerance-zero", "0.5"],
    ])
    def test_exit_two(self, argv, capsys):
        assert main(argv) == 2
        assert "config error" in capsys.readouterr().err

    def test_exit_three(self, capsys):
        argv = ["classify", "--psi", "s - r/2", "--samples", "5"]
        assert main(argv) == 3
        assert "domain error" in capsys.readouterr().err

    def test_config_file_with_overrides(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"metric": {"name": "riemann_sqrt", "k2": "1", "k": "b", "params": {"b": 1.0}},
                                    "samples": 4, "seed": 2}))
        assert main(["rigidity", "--config", str(path), "--seed", "5", "--k-fn", "b", "--k2-fn", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["config"]["seed"] == 5 and report["config"]["suites"] == ["rigidity"]

    def test_riemann_sqrt_flags(self, capsys):
        argv = ["validate", "--metric", "riemann_sqrt", "--k2-fn", "1 + a*r^2", "--k-fn", "a",
                "--param", "a=0.3", "--samples", "4", "--format", "csv"]
        assert main(argv) == 0
        assert capsys.readouterr().out.startswith(",".join(CSV_HEADER))
