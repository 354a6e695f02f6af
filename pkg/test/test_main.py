"""
Tests for the command-line interface.
"""

import contextlib
import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from src.main import ExitCode, main

FLIP_LINE = ('{"id":"f1","what":{"bit_index":7,"byte_index":0,"form":"flip","nature":"value"},'
             '"when":{"kind":"read","ordinal":1},"where":"SlaveSide"}')

FLIP_CAMPAIGN = {
    "template": {"name": "flip"},
    "sweep": {
        "where": ["SlaveSide", "MasterSide"],
        "when": [{"kind": "read", "ordinal": 1}],
        "what": [{"nature": "value", "form": "flip", "byte_index": 0, "bit_index": {"from": 0, "to": 7}}],
    },
}


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, content):
        path = self.tmp / name
        path.write_text(content if isinstance(content, str) else json.dumps(content), encoding="utf-8")
        return str(path)

    def cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def run_scenario_cli(self, scenario, name="run"):
        return self.cli("run", "--scenario", scenario,
                        "--trace", str(self.tmp / f"{name}.trace.jsonl"),
                        "--report", str(self.tmp / f"{name}.verdict.json"))


class TestValidateCommand(CliTestCase):

    def test_valid_file(self):
        path = self.write("ok.jsonl", '{"version":"1"}\n' + FLIP_LINE + "\n")
        code, out, _ = self.cli("validate", path)
        self.assertEqual(code, ExitCode.OK)
        self.assertEqual(out.strip(), "valid (1 spec(s))")

    def test_every_violation_is_printed(self):
        bad = FLIP_LINE.replace('"ordinal":1', '"ordinal":0').replace('"bit_index":7', '"bit_index":9')
        path = self.write("bad.jsonl", '{"version":"1"}\n' + bad + "\n")
        code, out, _ = self.cli("validate", path)
        self.assertEqual(code, ExitCode.USAGE)
        lines = out.strip().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertTrue(any("ordinal must be >= 1" in line for line in lines))
        self.assertTrue(any("bit_index out of range" in line for line in lines))

    def test_missing_file(self):
        code, _, err = self.cli("validate", str(self.tmp / "absent.jsonl"))
        self.assertEqual(code, ExitCode.USAGE)
        self.assertIn("cannot read", err)


class TestRunCommand(CliTestCase):

    def test_builtin_normal(self):
        trace = self.tmp / "normal.jsonl"
        report = self.tmp / "normal.json"
        code, out, _ = self.cli("run", "--scenario", "fig4-normal", "--trace", str(trace), "--report", str(report))
        self.assertEqual(code, ExitCode.OK)
        self.assertIn("FaultFreeNominal", out)
        self.assertTrue(trace.read_text(encoding="utf-8").startswith('{"format":"femsim-trace"'))
        self.assertEqual(json.loads(report.read_text(encoding="utf-8"))["outcome"], "FaultFreeNominal")

    def test_builtin_timeout(self):
        code, out, _ = self.run_scenario_cli("fig4-timeout", name="timeout")
        self.assertEqual(code, ExitCode.OK)
        self.assertIn("SutDetected(AllFF)", out)
        self.assertTrue((self.tmp / "timeout.trace.jsonl").is_file())
        verdict = json.loads((self.tmp / "timeout.verdict.json").read_text(encoding="utf-8"))
        self.assertEqual(verdict["detected_by"], "AllFF")

    def test_trace_and_report_are_required(self):
        for argv in (["--trace", str(self.tmp / "t.jsonl")], ["--report", str(self.tmp / "r.json")], []):
            with self.subTest(argv=argv):
                with self.assertRaises(SystemExit) as ctx:
                    self.cli("run", "--scenario", "fig4-normal", *argv)
                self.assertEqual(ctx.exception.code, ExitCode.USAGE)

    def test_forced_budget_exhaustion(self):
        path = self.write("short.json", {"name": "short", "max_ticks": 1})
        code, out, _ = self.run_scenario_cli(path)
        self.assertEqual(code, ExitCode.MISMATCH)
        self.assertIn("RunAborted", out)

    def test_silent_corruption_is_a_mismatch(self):
        flip = json.loads(FLIP_LINE)
        flip["what"]["bit_index"] = 0
        path = self.write("silent.json", {"name": "silent", "faultload": [flip]})
        code, out, _ = self.run_scenario_cli(path)
        self.assertEqual(code, ExitCode.MISMATCH)
        self.assertIn("SutSilentCorruption", out)

    def test_expectation_is_honoured(self):
        flip = json.loads(FLIP_LINE)
        flip["what"]["bit_index"] = 0
        path = self.write("expected.json", {"name": "expected", "faultload": [flip], "expect": "SutSilentCorruption"})
        code, _, _ = self.run_scenario_cli(path)
        self.assertEqual(code, ExitCode.OK)

    def test_invalid_scenario(self):
        path = self.write("bad.json", {"name": "bad", "topology": "direct", "faultload": [json.loads(FLIP_LINE)]})
        code, _, err = self.run_scenario_cli(path)
        self.assertEqual(code, ExitCode.USAGE)
        self.assertIn("a direct topology has no FEM", err)


class TestCampaignCommand(CliTestCase):

    def test_flip_campaign(self):
        config = self.write("campaign.json", FLIP_CAMPAIGN)
        out_dir = self.tmp / "out"
        code, out, _ = self.cli("campaign", "--config", config, "--out", str(out_dir))
        self.assertEqual(code, ExitCode.OK)
        self.assertEqual(len(list((out_dir / "traces").glob("*.jsonl"))), 16)
        report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
        self.assertEqual(report["scenarios"], 16)
        self.assertEqual(report["counts"]["SutDetected"], 2)
        self.assertEqual(report["counts"]["SutSilentCorruption"], 14)
        self.assertIn("flip-0001", (out_dir / "report.txt").read_text(encoding="utf-8"))
        self.assertIn("16 scenario(s)", out)

    def test_rerun_is_byte_identical(self):
        config = self.write("campaign.json", FLIP_CAMPAIGN)
        first, second = self.tmp / "first", self.tmp / "second"
        self.cli("campaign", "--config", config, "--out", str(first))
        self.cli("campaign", "--config", config, "--out", str(second), "--workers", "4")
        for name in ["report.json", "report.txt"] + [f"traces/flip-{i:04d}.jsonl" for i in range(1, 17)]:
            with self.subTest(file=name):
                self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_empty_sweep_dimension(self):
        config = dict(FLIP_CAMPAIGN, sweep=dict(FLIP_CAMPAIGN["sweep"], where=[]))
        code, _, err = self.cli("campaign", "--config", self.write("empty.json", config), "--out", str(self.tmp / "o"))
        self.assertEqual(code, ExitCode.USAGE)
        self.assertIn("empty", err)

    def test_bad_worker_count(self):
        config = self.write("campaign.json", FLIP_CAMPAIGN)
        code, _, _ = self.cli("campaign", "--config", config, "--out", str(self.tmp / "o"), "--workers", "0")
        self.assertEqual(code, ExitCode.USAGE)

    def test_unwritable_output(self):
        config = self.write("campaign.json", FLIP_CAMPAIGN)
        blocker = self.write("blocker", "not a directory")
        code, _, _ = self.cli("campaign", "--config", config, "--out", os.path.join(blocker, "out"))
        self.assertEqual(code, ExitCode.INTERNAL)


class TestDiffCommand(CliTestCase):

    def _trace(self, scenario):
        path = self.tmp / f"{scenario}.jsonl"
        self.cli("run", "--scenario", scenario, "--trace", str(path), "--report", str(self.tmp / f"{scenario}.json"))
        return str(path)

    def test_equal_traces(self):
        normal = self._trace("fig4-normal")
        code, out, _ = self.cli("diff", normal, normal)
        self.assertEqual(code, ExitCode.OK)
        self.assertIn("traces are equal", out)

    def test_fault_is_named(self):
        code, out, _ = self.cli("diff", self._trace("fig4-normal"), self._trace("fig4-flip"))
        self.assertEqual(code, ExitCode.MISMATCH)
        self.assertIn("fault=bit-flip", out)

    def test_corrupt_trace(self):
        corrupt = self.write("corrupt.jsonl", "{not a trace\n")
        code, _, _ = self.cli("diff", self._trace("fig4-normal"), corrupt)
        self.assertEqual(code, ExitCode.USAGE)


class TestGoldenCommand(CliTestCase):

    def test_all(self):
        out_dir = self.tmp / "golden"
        code, out, _ = self.cli("golden", "all", "--out", str(out_dir))
        self.assertEqual(code, ExitCode.OK)
        for name in ("fig4-normal", "fig4-timeout", "fig4-flip", "fig4-out"):
            for suffix in ("scenario.json", "trace.jsonl", "verdict.json", "obc.log", "slp.log", "fem.log"):
                with self.subTest(file=f"{name}.{suffix}"):
                    self.assertTrue((out_dir / f"{name}.{suffix}").is_file())
        self.assertEqual(len(out.strip().splitlines()), 4)

    def test_unknown_name(self):
        code, _, err = self.cli("golden", "fig9", "--out", str(self.tmp / "g"))
        self.assertEqual(code, ExitCode.USAGE)
        self.assertIn("unknown built-in scenario", err)


class TestUploadCommand(CliTestCase):

    def setUp(self):
        super().setUp()
        self.path = self.write("fl.jsonl", '{"version":"1"}\n' + FLIP_LINE + "\n")

    @patch('src.main.upload_faultload')
    @patch('src.main.get_server_health')
    def test_accepted(self, mock_health, mock_upload):
        mock_health.return_value = True
        mock_upload.return_value = (True, {"valid": True, "specs": 1, "canonical": ""})
        code, out, _ = self.cli("upload", self.path, "--server-host", "127.0.0.1", "--server-port", "5001")
        self.assertEqual(code, ExitCode.OK)
        self.assertIn("valid (1 spec(s))", out)
        mock_health.assert_called_once_with("http://127.0.0.1:5001")
        self.assertEqual(mock_upload.call_args[0][0], "http://127.0.0.1:5001")

    @patch('src.main.upload_faultload')
    @patch('src.main.get_server_health')
    def test_rejected(self, mock_health, mock_upload):
        mock_health.return_value = True
        mock_upload.return_value = (False, {"valid": False, "violations": ["line 2: bad"]})
        code, out, _ = self.cli("upload", self.path)
        self.assertEqual(code, ExitCode.USAGE)
        self.assertIn("line 2: bad", out)

    @patch('src.main.upload_faultload')
    @patch('src.main.get_server_health')
    def test_unreachable(self, mock_health, mock_upload):
        mock_health.return_value = False
        code, _, _ = self.cli("upload", self.path)
        self.assertEqual(code, ExitCode.INTERNAL)
        mock_upload.assert_not_called()


class TestMain(CliTestCase):

    def test_no_command(self):
        code, _, _ = self.cli()
        self.assertEqual(code, ExitCode.USAGE)

    @patch('src.main.run_scenario')
    def test_unexpected_error(self, mock_run):
        mock_run.side_effect = RuntimeError("boom")
        code, _, _ = self.run_scenario_cli("fig4-normal")
        self.assertEqual(code, ExitCode.INTERNAL)


if __name__ == '__main__':
    unittest.main()
