"""
Contains the PathResolver class responsible for finding input files
(pose CSVs and similar) from files, directories and glob patterns.
"""
import glob
import logging
from pathlib import Path
from typing import List, Sequence, Set
log = logging.getLogger(__name__)
# pylint: disable=too-few-public-methods
class PathResolver:
    """Resolves input paths (files, directories, globs) into a list of files with given suffixes."""
    @staticmethod
    def _process_single_target(target_str: str, suffixes: Sequence[str], found: Set[Path]) -> None:
        """Processes a single resolved target path (file or directory)."""
        try:
            target_path = Path(target_str).resolve()
            if not target_path.exists():
                log.warning("Path does not exist: %s (from input '%s')", target_path, target_str)
                return
            if target_path.is_dir():
                log.debug("Path is a directory, searching recursively: %s", target_path)
                for item in sorted(target_path.rglob("*")):
                    if item.is_file() and item.suffix in suffixes:
                        found.add(item)
            elif target_path.is_file():
                if target_path.suffix in suffixes:
                    found.add(target_path)
                else:
                    log.warning("Skipping file with unexpected suffix: %s", target_path)
            else:
                log.warning("Skipping non-file/non-directory path: %s", target_path)
        except OSError as e:
            log.warning("Error resolving or accessing path '%s': %s", target_str, e)
    @staticmethod
    def gather_files(paths: List[str], suffixes: Sequence[str] = (".csv",)) -> List[Path]:
        """
        Finds all unique files with the given suffixes.
        Args:
            paths: File paths, directory paths, or glob patterns.
            suffixes: Accepted file suffixes, including the dot.
        Returns:
            A sorted list of unique Paths.
        """
        found: Set[Path] = set()
        for path_str in paths:
            glob_matches = glob.glob(path_str, recursive=True)
            for target_str in glob_matches if glob_matches else [path_str]:
                PathResolver._process_single_target(target_str, suffixes, found)
        files = sorted(found)
        log.debug("Total unique input files found: %d", len(files))
        return files
