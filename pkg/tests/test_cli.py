import json
import subprocess
import sys

import numpy as np
import pytest

from hhverify import HermitianMatrix
from hhverify.cli import (CampaignConfig, CampaignResult, ConfigError, format_machine, format_table,
                          instance_rng, main, read_config_file, run_campaign, write_report)


def cfg(**kw):
    return CampaignConfig.from_mapping(kw)


class TestRunCampaign:
    def test_single_scalar_chain(self):
        res = run_campaign(cfg(suite="hh-chain", f="square", eta="difference", dim="1", trials=1, seed=7))
        assert res.instances == 1 and res.passed == 1 and res.expectation_met

    def test_preinvex_counterexample_for_affine(self):
        res = run_campaign(cfg(suite="preinvex", f="affine:0,1", eta="eta1", dim="2", trials=5, expected="fail"))
        assert res.expectation_met
        sweep = [r for r in res.records if r.instance == -1][0]
        assert sweep.verdict == "fail" and sweep.counterexample is not None

    def test_preinvex_constant_eta2(self):
        res = run_campaign(cfg(suite="preinvex", f="const:3", eta="eta2", dim="1,3", trials=10))
        assert res.expectation_met and res.passed == res.instances

    @pytest.mark.parametrize("suite,extra", [
        ("corollary", {}), ("product-right", {"f": "square", "g": "const:1", "lo": "0"}),
        ("product-left", {"f": "square", "lo": "0"}), ("trapezoid", {"f": "square", "dim": "1,2"}),
        ("condition-c", {"eta": "eta1"}), ("reductions", {"f": "square", "g": "square", "dim": "1,2", "lo": "0"}),
    ])
    def test_every_suite_runs(self, suite, extra):
        res = run_campaign(cfg(suite=suite, trials=3, **extra))
        assert res.error is None and res.expectation_met, format_table(res)

    def test_condition_c_failure_for_eta3(self):
        res = run_campaign(cfg(suite="condition-c", eta="eta3", trials=20, expected="fail"))
        assert res.expectation_met

    def test_summary_matches_records(self):
        res = run_campaign(cfg(suite="preinvex", f="identity", eta="eta1", dim="2", trials=8, expected="fail"))
        s = res.summary()
        assert s["instances"] == len(res.records)
        assert s["passed"] == sum(r.verdict == "pass" for r in res.records)
        assert s["worst_margin"] == min(r.margin for r in res.records)

    def test_records_sorted(self):
        res = run_campaign(cfg(suite="hh-chain", dim="2,1", k="2,1", trials=3))
        keys = [r.sort_key() for r in res.records]
        assert keys == sorted(keys)

    def test_error_keeps_partial_records(self):
        # sampling box outside the T/U branches at n = 1 is unsatisfiable
        res = run_campaign(cfg(suite="hh-chain", eta="eta1", lo="-0.5", hi="0.5", trials=2))
        assert res.error is not None and not res.expectation_met

    def test_instance_rng_is_order_independent(self):
        a = instance_rng(5, 2, 4, 17).standard_normal(3)
        b = instance_rng(5, 2, 4, 17).standard_normal(3)
        c = instance_rng(5, 2, 4, 18).standard_normal(3)
        assert np.array_equal(a, b) and not np.array_equal(a, c)


class TestConfig:
    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            cfg(suite="hh-chain", colour="blue")

    def test_unknown_suite(self):
        with pytest.raises(ConfigError):
            cfg(suite="nope")

    def test_unknown_function(self):
        with pytest.raises(ConfigError):
            cfg(suite="hh-chain", f="sinh")

    def test_trials_positive(self):
        with pytest.raises(ConfigError):
            cfg(suite="hh-chain", trials=0)

    def test_missing_suite(self):
        with pytest.raises(ConfigError):
            CampaignConfig.from_mapping({"f": "square"})

    def test_file(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# campaign\nsuite = hh-chain\nf = square  # convex\ndim = 1,2\nk = 2\n")
        vals = read_config_file(path)
        assert vals == {"suite": "hh-chain", "f": "square", "dim": "1,2", "k": "2"}
        assert cfg(**vals).dim == (1, 2)

    def test_file_syntax_error(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("suite hh-chain\n")
        with pytest.raises(ConfigError):
            read_config_file(path)


class TestReports:
    def test_empty(self):
        res = CampaignResult(cfg(suite="hh-chain"))
        assert format_machine(res) == ""
        table = format_table(res)
        assert table.splitlines() == ["suite  instance  dim  kp  margin  verdict"]

    def test_single_pass_line(self):
        res = run_campaign(cfg(suite="hh-chain", dim="1", trials=1, seed=7))
        lines = format_machine(res).splitlines()
        assert len(lines) == 1
        rec = json.loads(lines[0])
        assert rec["verdict"] == "pass" and set(rec) == {"suite", "instance", "dim", "kp", "margin", "verdict"}

    def test_counterexample_round_trip(self):
        res = run_campaign(cfg(suite="preinvex", f="identity", eta="eta1", dim="2", trials=3, expected="fail"))
        recs = [json.loads(l) for l in format_machine(res).splitlines()]
        bad = [r for r in recs if r["verdict"] == "fail"][0]
        cex = bad["counterexample"]
        A, B = HermitianMatrix.from_dict(cex["A"]), HermitianMatrix.from_dict(cex["B"])
        from hhverify import EtaMap, OperatorSet
        from hhverify.functions import identity
        from hhverify.preinvex import preinvex_margins
        lam, tol = preinvex_margins(identity(), EtaMap("eta1"), OperatorSet.t_union_u(), A, B, [cex["t"]])
        assert lam[0] < -tol[0] and lam[0] == pytest.approx(cex["margin"], abs=1e-12)

    def test_deterministic_bytes(self):
        c = cfg(suite="product-right", f="square", g="exp", lo="0", dim="1,3", trials=4, seed=11)
        assert format_machine(run_campaign(c)) == format_machine(run_campaign(c))

    def test_merge_by_partition(self):
        full = run_campaign(cfg(suite="preinvex", f="square", eta="eta1", dim="2", trials=6, seed=3))
        first = run_campaign(cfg(suite="preinvex", f="square", eta="eta1", dim="2", trials=2, seed=3))
        second = run_campaign(cfg(suite="preinvex", f="square", eta="eta1", dim="2", trials=4, start=2, seed=3))
        merged = sorted(format_machine(first).splitlines() + format_machine(second).splitlines())
        assert merged == sorted(format_machine(full).splitlines())

    def test_write_report_to_file(self, tmp_path):
        res = run_campaign(cfg(suite="hh-chain", trials=2))
        out = tmp_path / "r.txt"
        write_report(res, out, "table")
        assert out.read_text() == format_table(res)

    def test_write_report_bad_path(self, tmp_path):
        res = CampaignResult(cfg(suite="hh-chain"))
        with pytest.raises(OSError, match="missing"):
            write_report(res, tmp_path / "missing" / "r.txt", "machine")


class TestMain:
    def test_pass(self, capsys):
        assert main(["--suite", "hh-chain", "--f", "square", "--dim", "1", "--trials", "1", "--seed", "7"]) == 0
        assert "1/1 pass" in capsys.readouterr().out

    def test_expected_fail_met(self, capsys):
        assert main(["--suite", "preinvex", "--f", "affine:0,1", "--eta", "eta1", "--expected", "fail",
                     "--format", "machine"]) == 0
        summary = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert summary["expectation_met"]

    def test_expected_fail_not_met(self):
        assert main(["--suite", "preinvex", "--f", "square", "--eta", "eta1", "--expected", "fail",
                     "--trials", "5"]) == 1

    def test_expected_pass_violated(self):
        assert main(["--suite", "preinvex", "--f", "identity", "--eta", "eta1", "--trials", "5"]) == 1

    def test_config_error(self, capsys):
        assert main(["--suite", "hh-chain", "--f", "nonsense"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_runtime_error(self):
        assert main(["--suite", "hh-chain", "--eta", "eta1", "--interval=-0.5,0.5", "--dim", "1"]) == 2

    def test_config_file_with_override(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text("suite = preinvex\nf = identity\neta = eta1\ntrials = 3\nexpected = pass\n")
        assert main(["--config", str(path)]) == 1
        assert main(["--config", str(path), "--expected", "fail"]) == 0

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "hhverify", "--suite", "hh-chain", "--trials", "1",
                               "--format", "machine"], capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "pass"
