# pylint: disable=too-few-public-methods
"""
Contains the CLI class responsible for parsing command-line arguments
and dispatching the se3grasp commands (datagen, train, sample, eval,
icp, igso3-table) with the run configuration they share.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional
from . import commands
from .config import RunConfig, load_config, parse_assignment
from .errors import ConfigError, MissingInputError, Se3GraspError
from .file_writer import FileWriter
log = logging.getLogger(__name__)
COMMON_FLAGS = {
    "seed": "seed",
    "mode": "mode",
    "dataset": "dataset",
    "output_dir": "output_dir",
    "workers": "workers",
}
COMMAND_FLAGS = {
    "datagen": {"scenes": "datagen.scenes"},
    "train": {"steps": "optim.steps", "lr": "optim.lr", "batch": "optim.batch"},
    "sample": {
        "solver": "sampler.solver",
        "steps": "sampler.steps",
        "cfg_weight": "sampler.cfg_weight",
        "samples_per_scene": "sampler.samples_per_scene",
        "theta_thr": "guidance.theta_thr",
        "lambda_gd": "guidance.lambda_gd",
        "e_app": "guidance.e_app",
    },
    "eval": {"theta_thr": "guidance.theta_thr", "e_app": "guidance.e_app"},
}
def vector3(text: str) -> List[float]:
    """Parses `x,y,z` into three floats."""
    parts = text.split(",")
    try:
        values = [float(v) for v in parts]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from e
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return values
class CLIRunner:
    """Helper class to manage the execution flow of the CLI."""
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: Optional[RunConfig] = None
        self.writer = FileWriter()
    def setup_and_validate(self) -> bool:
        """Sets up logging and builds the validated run configuration."""
        if not self.args:
            log.error("CLIRunner initialized with invalid arguments.")
            return False
        self._setup_logging()
        log.debug("Parsed arguments: %s", self.args)
        self.config = load_config(self.args.config, self._overrides())
        log.info("Configuration hash %s (mode=%s, seed=%d)", self.config.config_hash(), self.config.mode, self.config.seed)
        return True
    def _setup_logging(self) -> None:
        """Configures logging level based on arguments."""
        log_level = logging.INFO
        if getattr(self.args, "quiet", False):
            log_level = logging.WARNING
        elif getattr(self.args, "verbose", False):
            log_level = logging.DEBUG
        root_logger = logging.getLogger()
        if not root_logger.hasHandlers():
            handler = logging.StreamHandler(sys.stderr)
            formatter = logging.Formatter(
                "[%(asctime)s] [%(name)s] [%(levelname)s] %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
            handler.setFormatter(formatter)
            root_logger.addHandler(handler)
        root_logger.setLevel(log_level)
        for handler in root_logger.handlers:
            handler.setLevel(log_level)
        log.debug("Logging level set to: %s", logging.getLevelName(log_level))
    def _overrides(self) -> Dict[str, Any]:
        """Collects config overrides: generic --set first, dedicated flags on top."""
        overrides: Dict[str, Any] = {}
        for assignment in getattr(self.args, "set", None) or []:
            key, value = parse_assignment(assignment)
            overrides[key] = value
        flags = {**COMMON_FLAGS, **COMMAND_FLAGS.get(self.args.command, {})}
        for attr, key in flags.items():
            value = getattr(self.args, attr, None)
            if value is not None:
                overrides[key] = str(value) if isinstance(value, Path) else value
        if getattr(self.args, "no_guidance", False):
            overrides["guidance.enabled"] = False
        return overrides
    def _dispatch(self) -> int:
        cfg = self.config
        command = self.args.command
        if command == "datagen":
            return commands.cmd_datagen(cfg, self.writer, check=self.args.check)
        if command == "train":
            return commands.cmd_train(cfg, self.writer)
        if command == "sample":
            return commands.cmd_sample(cfg, self.writer, self.args.checkpoint)
        if command == "eval":
            return commands.cmd_eval(cfg, self.writer, self.args.poses, self.args.checkpoint)
        if command == "icp":
            return commands.cmd_icp(cfg, self.writer, self.args.source, self.args.target, self.args.ray, self.args.output)
        return commands.cmd_igso3_table(cfg, self.writer, self.args.eps, self.args.output)
    def run(self) -> int:
        """
        Builds the configuration and runs the selected command.
        Returns:
            0 on success, 1 on a runtime failure, 2 on a usage or configuration error.
        """
        try:
            if not self.setup_and_validate():
                return 1
            log.info("Running %s", self.args.command)
            exit_code = self._dispatch()
        except ConfigError as e:
            for violation in e.violations:
                log.error("Configuration error: %s", violation)
            return 2
        except MissingInputError as e:
            log.error("%s", e)
            return 2
        except Se3GraspError as e:
            log.error("%s failed: %s", self.args.command, e)
            return 1
        except OSError as e:
            log.error("IO error during %s: %s", self.args.command, e)
            return 1
        if exit_code == 0:
            log.info("%s complete.", self.args.command)
        return exit_code
class CLI:
    """Command Line Interface handler."""
    def __init__(self):
        self.parser = self._create_parser()
    @staticmethod
    def _common_parser() -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("-c", "--config", type=Path, help="TOML run configuration.")
        common.add_argument("--seed", type=int, help="Master seed.")
        common.add_argument("--mode", choices=("score", "flow"), help="Generative branch.")
        common.add_argument("--dataset", type=Path, help="Dataset file (default: <output-dir>/dataset.jsonl).")
        common.add_argument("-o", "--output-dir", type=Path, help="Output directory (default: $SE3GRASP_OUTPUT_ROOT or ./runs).")
        common.add_argument("--workers", type=int, help="Worker threads; results do not depend on it.")
        common.add_argument(
            "--set", action="append", metavar="SECTION.KEY=VALUE", help="Override any configuration field (repeatable)."
        )
        common.add_argument("-q", "--quiet", action="store_true", help="Suppress info messages (show warnings/errors).")
        common.add_argument("-v", "--verbose", action="store_true", help="Show debug messages.")
        return common
    def _create_parser(self) -> argparse.ArgumentParser:
        """Creates the argument parser."""
        epilog_text = """Examples (when run as script):
  se3grasp datagen -o runs/demo --seed 7
  se3grasp train -o runs/demo --mode flow
  se3grasp sample -o runs/demo --mode flow --solver rk4 --cfg-weight 2
  se3grasp eval -o runs/demo
  se3grasp icp --source a.csv --target b.csv --ray 0,0,1
Examples (when run as module):
  python -m src.se3grasp.main igso3-table --eps 0.5
"""
        parser = argparse.ArgumentParser(
            prog="se3grasp",
            description="Generate, train, sample and evaluate SE(3) grasp pose models.",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            exit_on_error=False,
            epilog=epilog_text,
        )
        common = self._common_parser()
        sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        datagen = sub.add_parser("datagen", parents=[common], exit_on_error=False, help="Generate the synthetic grasp dataset.")
        datagen.add_argument("--scenes", type=int, help="Number of scenes to generate.")
        datagen.add_argument("--check", action="store_true", help="Re-validate an existing dataset instead.")
        train = sub.add_parser("train", parents=[common], exit_on_error=False, help="Train a score or flow model.")
        train.add_argument("--steps", type=int, help="Optimizer steps.")
        train.add_argument("--lr", type=float, help="Adam learning rate.")
        train.add_argument("--batch", type=int, help="Batch size.")
        sample = sub.add_parser("sample", parents=[common], exit_on_error=False, help="Sample grasps for every scene.")
        sample.add_argument("--checkpoint", type=Path, help="Checkpoint (default: <output-dir>/model_<mode>.ckpt).")
        sample.add_argument("--solver", choices=("euler", "rk4"), help="Flow ODE solver.")
        sample.add_argument("--steps", type=int, help="Sampler steps (default 100 score, 40 flow).")
        sample.add_argument("--cfg-weight", type=float, help="Classifier-free guidance weight.")
        sample.add_argument("--samples-per-scene", type=int, help="Grasps drawn per scene.")
        sample.add_argument("--theta-thr", type=float, help="Palm alignment threshold.")
        sample.add_argument("--lambda-gd", type=float, help="Palm guidance weight.")
        sample.add_argument("--e-app", type=vector3, metavar="X,Y,Z", help="Approach direction in the wrist frame.")
        sample.add_argument("--no-guidance", action="store_true", help="Disable palm guidance.")
        evaluate = sub.add_parser("eval", parents=[common], exit_on_error=False, help="Score sampled grasps.")
        evaluate.add_argument("--poses", nargs="*", default=[], help="Pose CSV files, directories or globs.")
        evaluate.add_argument("--checkpoint", type=Path, action="append", default=[], help="Checkpoint per mode (repeatable).")
        evaluate.add_argument("--theta-thr", type=float, help="Palm alignment threshold for the alignment report.")
        evaluate.add_argument("--e-app", type=vector3, metavar="X,Y,Z", help="Approach direction for the alignment report.")
        icp = sub.add_parser("icp", parents=[common], exit_on_error=False, help="Register two clouds along a ray.")
        icp.add_argument("--source", type=Path, required=True, help="Source cloud CSV (x,y,z).")
        icp.add_argument("--target", type=Path, required=True, help="Target cloud CSV (x,y,z).")
        icp.add_argument("--ray", type=vector3, default=[0.0, 0.0, 1.0], metavar="X,Y,Z", help="Ray direction.")
        icp.add_argument("--output", type=Path, help="JSON result file (default: stdout).")
        table = sub.add_parser("igso3-table", parents=[common], exit_on_error=False, help="Dump an IGSO(3) table.")
        table.add_argument("--eps", type=float, required=True, help="Concentration ε.")
        table.add_argument("--output", type=Path, help="CSV file (default: stdout).")
        return parser
    def run(self, args: Optional[List[str]] = None) -> None:
        """Parses arguments and runs the selected command."""
        parsed_args: Optional[argparse.Namespace] = None
        try:
            parsed_args = self.parser.parse_args(args)
        except argparse.ArgumentError as e:
            log.error("Argument error: %s", e)
            stderr = getattr(sys, "stderr", None)
            if stderr:
                try:
                    self.parser.print_usage(stderr)
                except Exception:  # pylint: disable=broad-except
                    log.debug("Could not print usage to stderr.")
            sys.exit(2)
        runner = CLIRunner(parsed_args)
        exit_code = runner.run()
        sys.exit(exit_code)
