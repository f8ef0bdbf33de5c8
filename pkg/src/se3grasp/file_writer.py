"""
Contains the FileWriter class responsible for writing command outputs to a
file or stdout. File writes go through a temporary name in the destination
directory and are renamed into place on success.
"""
import json
import os
import sys
import logging
import tempfile
from pathlib import Path
from typing import Any, Optional
log = logging.getLogger(__name__)
class FileWriter:
    """Handles writing data to a destination (file or stdout)."""
    def write(self, data: bytes, target_path: Optional[Path]) -> None:
        """
        Writes data to the target path atomically, or to stdout.
        Args:
            data: The bytes to write.
            target_path: The output file, or None for stdout.
        Raises:
            IOError: If the directory cannot be created or the write fails.
        """
        if target_path is None:
            log.debug("Writing data to stdout")
            try:
                sys.stdout.buffer.write(data)
                sys.stdout.buffer.flush()
            except OSError as e:
                log.error("Could not write to stdout: %s", e)
                raise IOError(f"Could not write to stdout: {e}") from e
            return
        try:
            target_path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            log.error("Could not create directory for %s: %s", target_path, e)
            raise IOError(f"Could not create directory for {target_path}: {e}") from e
        log.debug("Writing data to file: %s", target_path)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target_path.name}.", suffix=".tmp", dir=target_path.parent)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp_name, target_path)
        except OSError as e:
            log.error("Could not write to file %s: %s", target_path, e)
            try:
                os.unlink(tmp_name)
            except OSError:
                log.debug("Temporary file %s already gone", tmp_name)
            raise IOError(f"Could not write to file {target_path}: {e}") from e
    def write_text(self, text: str, target_path: Optional[Path]) -> None:
        self.write(text.encode("utf-8"), target_path)
    def write_json(self, payload: Any, target_path: Optional[Path]) -> None:
        """Writes payload as indented JSON with sorted keys."""
        self.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", target_path)
