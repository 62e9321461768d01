"""
Module for RunManifest, the record of one cli run: what was asked, which stages ran, how they ended and
which files they wrote.

Classes:
- RunManifest: config echo, version, timestamps, per-stage status and output paths.

Functions:
- load_manifest: Loads a manifest from a JSON file.
- save_manifest: Writes a manifest atomically, through a temporary file and os.replace.

Example:
manifest = RunManifest("solve", config.to_dict())
manifest.record_stage("mesh", STATUS_OK)
manifest.add_output("/tmp/out/fields.csv")
manifest.finish(0)
save_manifest(manifest, "/tmp/out/manifest.json")
"""
import json
import os
import tempfile
import threading
from datetime import datetime, timezone
from typing import List, Optional

from modules.consts import VERSION
from modules.errors import IoFailure

STATUS_OK = "ok"
STATUS_FAILED = "failed"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest:
    """
    Record of one run.

    Args:
        command (str): the subcommand, e.g. "solve".
        config (Optional[dict]): config echo, None if the config could not be loaded.
        seed (Optional[int]): seed of the random samples, if the command uses one.

    Methods:
        record_stage(name, status, error=None): appends a stage outcome.
        add_output(path): remembers a written file.
        finish(exit_code): stamps the end time and the exit code.
        failed_stage() -> Optional[str]: name of the first failed stage.
        to_dict() -> dict: the manifest as written to JSON.
    """

    def __init__(self, command: str, config: Optional[dict] = None, seed: Optional[int] = None):
        self.command = command
        self.config = config
        self.seed = seed
        self.version = VERSION
        self.started_at = _now()
        self.finished_at: Optional[str] = None
        self.exit_code: Optional[int] = None
        self.stages: List[dict] = []
        self.outputs: List[str] = []
        self._lock = threading.Lock()

    def record_stage(self, name: str, status: str, error: Optional[BaseException] = None):
        """
        Appends a stage outcome.

        Args:
            name (str): stage name.
            status (str): STATUS_OK or STATUS_FAILED.
            error (Optional[BaseException]): the error a failed stage ended with.
        """
        entry = {"stage": name, "status": status, "at": _now()}
        if error is not None:
            entry["error"] = str(error)
            entry["error_type"] = type(error).__name__
        with self._lock:
            self.stages.append(entry)

    def add_output(self, path: str):
        with self._lock:
            self.outputs.append(os.path.abspath(path))

    def finish(self, exit_code: int):
        self.exit_code = exit_code
        self.finished_at = _now()

    def failed_stage(self) -> Optional[str]:
        with self._lock:
            for entry in self.stages:
                if entry["status"] == STATUS_FAILED:
                    return entry["stage"]
        return None

    def to_dict(self) -> dict:
        with self._lock:
            return {
                "command": self.command,
                "version": self.version,
                "config": self.config,
                "seed": self.seed,
                "started_at": self.started_at,
                "finished_at": self.finished_at,
                "exit_code": self.exit_code,
                "stages": [dict(entry) for entry in self.stages],
                "outputs": list(self.outputs),
            }


def load_manifest(path: str) -> dict:
    """
    Loads a manifest written by save_manifest.

    Args:
        path (str): The path to the JSON file.

    Returns:
        dict: the manifest content.
    """
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def save_manifest(manifest: RunManifest, path: str) -> None:
    """
    Writes a manifest so that readers see either the old file or the complete new one.

    Args:
        manifest (RunManifest): The manifest.
        path (str): The path to the JSON file.

    Raises:
        IoFailure: if the file cannot be written.
    """
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        with tempfile.NamedTemporaryFile("w", encoding="utf-8", dir=directory, prefix=".manifest-",
                                         suffix=".tmp", delete=False) as f:
            tmp_path = f.name
            json.dump(manifest.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path is not None and os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise IoFailure(f"cannot write manifest {path}: {e}") from e
