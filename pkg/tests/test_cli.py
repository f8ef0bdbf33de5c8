# pylint: disable=missing-module-docstring,too-many-public-methods
import argparse
import logging
import shutil
import tempfile
import unittest
from io import StringIO
from pathlib import Path
from unittest.mock import ANY, MagicMock, patch
from src.se3grasp.cli import CLI, CLIRunner, vector3
from src.se3grasp.errors import DatasetError, MissingInputError, SamplingError
MOCK_COMMANDS = MagicMock()
@patch("src.se3grasp.cli.commands", MOCK_COMMANDS)
class TestCLI(unittest.TestCase):
    """Tests for the CLI and CLIRunner classes."""
    def setUp(self):
        """Set up test environment."""
        self.cli = CLI()
        self.test_dir = Path(tempfile.mkdtemp())
        MOCK_COMMANDS.reset_mock(return_value=True, side_effect=True)
        for name in ("cmd_datagen", "cmd_train", "cmd_sample", "cmd_eval", "cmd_icp", "cmd_igso3_table"):
            getattr(MOCK_COMMANDS, name).return_value = 0
        logging.disable(logging.CRITICAL)
        self.stderr_patch = patch("sys.stderr", new_callable=StringIO)
        self.mock_stderr = self.stderr_patch.start()
    def tearDown(self):
        """Clean up test environment."""
        shutil.rmtree(self.test_dir, ignore_errors=True)
        logging.disable(logging.NOTSET)
        self.stderr_patch.stop()
    def _create_runner(self, cli_args_list: list) -> CLIRunner:
        """Helper to create a CLIRunner instance with parsed args."""
        return CLIRunner(self.cli.parser.parse_args(cli_args_list))
    def test_parse_datagen(self):
        """Test datagen argument parsing."""
        args = self.cli.parser.parse_args(["datagen", "--scenes", "5", "--check", "-o", str(self.test_dir)])
        self.assertEqual(args.command, "datagen")
        self.assertEqual(args.scenes, 5)
        self.assertTrue(args.check)
        self.assertEqual(args.output_dir, self.test_dir)
        self.assertIsNone(args.config)
        self.assertFalse(args.quiet)
    def test_parse_sample_vectors(self):
        """Test that --e-app is read as three floats."""
        args = self.cli.parser.parse_args(["sample", "--e-app", "1,0,0", "--solver", "rk4"])
        self.assertEqual(args.e_app, [1.0, 0.0, 0.0])
        self.assertEqual(args.solver, "rk4")
        self.assertFalse(args.no_guidance)
    def test_parse_icp_default_ray(self):
        """Test the icp ray default."""
        args = self.cli.parser.parse_args(["icp", "--source", "a.csv", "--target", "b.csv"])
        self.assertEqual(args.ray, [0.0, 0.0, 1.0])
        self.assertIsNone(args.output)
    def test_vector3_rejects_bad_input(self):
        """Test vector parsing errors."""
        with self.assertRaises(argparse.ArgumentTypeError):
            vector3("1,2")
        with self.assertRaises(argparse.ArgumentTypeError):
            vector3("a,b,c")
    def test_overrides_from_flags(self):
        """Test that dedicated flags win over --set and map onto config keys."""
        runner = self._create_runner(
            [
                "sample", "--seed", "3", "-o", str(self.test_dir), "--steps", "12",
                "--set", "sampler.t_min=0.01", "--set", "sampler.steps=5",
                "--no-guidance", "--e-app", "1,0,0",
            ]
        )
        self.assertEqual(
            runner._overrides(),  # pylint: disable=protected-access
            {
                "sampler.t_min": 0.01,
                "sampler.steps": 12,
                "seed": 3,
                "output_dir": str(self.test_dir),
                "guidance.e_app": [1.0, 0.0, 0.0],
                "guidance.enabled": False,
            },
        )
    def test_overrides_for_train(self):
        """Test that --steps means optimizer steps for train."""
        runner = self._create_runner(["train", "--steps", "7", "--lr", "0.01", "--mode", "score"])
        overrides = runner._overrides()  # pylint: disable=protected-access
        self.assertEqual(overrides, {"optim.steps": 7, "optim.lr": 0.01, "mode": "score"})
    def test_run_sample(self):
        """Test a successful sample run."""
        runner = self._create_runner(["sample", "-o", str(self.test_dir), "--mode", "score", "--cfg-weight", "1.5"])
        self.assertEqual(runner.run(), 0)
        MOCK_COMMANDS.cmd_sample.assert_called_once_with(ANY, runner.writer, None)
        cfg = MOCK_COMMANDS.cmd_sample.call_args[0][0]
        self.assertEqual(cfg.mode, "score")
        self.assertEqual(cfg.sampler.cfg_weight, 1.5)
        self.assertEqual(cfg.output_path(), self.test_dir)
    def test_run_eval(self):
        """Test eval dispatch with explicit pose files and checkpoints."""
        runner = self._create_runner(["eval", "--poses", "a.csv", "b.csv", "--checkpoint", "m.ckpt"])
        self.assertEqual(runner.run(), 0)
        MOCK_COMMANDS.cmd_eval.assert_called_once_with(ANY, runner.writer, ["a.csv", "b.csv"], [Path("m.ckpt")])
    def test_run_icp(self):
        """Test icp dispatch."""
        runner = self._create_runner(["icp", "--source", "a.csv", "--target", "b.csv", "--ray", "0,1,0"])
        self.assertEqual(runner.run(), 0)
        MOCK_COMMANDS.cmd_icp.assert_called_once_with(ANY, runner.writer, Path("a.csv"), Path("b.csv"), [0.0, 1.0, 0.0], None)
    def test_run_igso3_table(self):
        """Test igso3-table dispatch."""
        runner = self._create_runner(["igso3-table", "--eps", "0.5"])
        self.assertEqual(runner.run(), 0)
        MOCK_COMMANDS.cmd_igso3_table.assert_called_once_with(ANY, runner.writer, 0.5, None)
    def test_datagen_check_failure_propagates(self):
        """Test that a failing re-validation gives exit code 1."""
        MOCK_COMMANDS.cmd_datagen.return_value = 1
        runner = self._create_runner(["datagen", "--check"])
        self.assertEqual(runner.run(), 1)
        MOCK_COMMANDS.cmd_datagen.assert_called_once_with(ANY, runner.writer, check=True)
    def test_unknown_config_key(self):
        """Test that configuration errors give exit code 2 before any work."""
        runner = self._create_runner(["train", "--set", "optim.bogus=1"])
        self.assertEqual(runner.run(), 2)
        MOCK_COMMANDS.cmd_train.assert_not_called()
    def test_out_of_range_value(self):
        """Test that range violations give exit code 2."""
        runner = self._create_runner(["sample", "--steps", "-1"])
        self.assertEqual(runner.run(), 2)
        MOCK_COMMANDS.cmd_sample.assert_not_called()
    def test_missing_config_file(self):
        """Test that a missing TOML file is a usage error."""
        runner = self._create_runner(["train", "-c", str(self.test_dir / "absent.toml")])
        self.assertEqual(runner.run(), 2)
    def test_missing_input(self):
        """Test that a missing input file gives exit code 2."""
        MOCK_COMMANDS.cmd_sample.side_effect = MissingInputError("checkpoint not found: x.ckpt")
        self.assertEqual(self._create_runner(["sample"]).run(), 2)
    def test_runtime_failures(self):
        """Test that runtime errors give exit code 1."""
        for error in (DatasetError("bad dataset"), SamplingError("non-finite field", 3, 0.5), OSError("disk full")):
            with self.subTest(error=type(error).__name__):
                MOCK_COMMANDS.cmd_train.side_effect = error
                self.assertEqual(self._create_runner(["train"]).run(), 1)
    def test_runner_without_args(self):
        """Test that a runner without arguments fails."""
        self.assertEqual(CLIRunner(None).run(), 1)
    @patch("src.se3grasp.cli.CLIRunner")
    def test_cli_run_exits_with_runner_code(self, mock_runner_class):
        """Test that CLI.run exits with the runner's code."""
        mock_runner = MagicMock()
        mock_runner.run.return_value = 0
        mock_runner_class.return_value = mock_runner
        with self.assertRaises(SystemExit) as cm:
            self.cli.run(["train"])
        self.assertEqual(cm.exception.code, 0)
        mock_runner_class.assert_called_once()
    def test_cli_run_argument_errors(self):
        """Test that malformed command lines exit with code 2."""
        for argv in (["sample", "--seed", "abc"], ["unknown"], ["sample", "--e-app", "1,2"], ["icp"]):
            with self.subTest(argv=argv):
                with self.assertRaises(SystemExit) as cm:
                    self.cli.run(argv)
                self.assertEqual(cm.exception.code, 2)
if __name__ == "__main__":
    unittest.main()
