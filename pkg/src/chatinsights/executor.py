"""Sandboxed execution of generated analysis code.

Each snippet runs in a fresh Python subprocess inside a private temp
directory, with the active dataset copied in as ``data.csv``. A
``sitecustomize`` shim disables socket creation so generated code cannot
reach the network, and a wall-clock timeout bounds runaway snippets.

Chart output travels by convention: a snippet that wants to render writes
a JSON spec to ``chart_<n>.json`` in its working directory, and the
executor collects those files (sorted by name) as artifacts.

A scripted executor replays canned results FIFO for deterministic tests.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

DEFAULT_TIMEOUT_S = 30.0
OUTPUT_CAP = 20_000  # chars kept per stream; transcripts stay bounded

SITECUSTOMIZE = """\
import socket

def _blocked(*args, **kwargs):
    raise OSError("network access is disabled in the analysis sandbox")

socket.socket = _blocked
socket.create_connection = _blocked
"""


@dataclass(frozen=True)
class ChartArtifact:
    name: str
    spec: dict


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    exit_code: int
    duration_s: float
    timed_out: bool = False
    artifacts: tuple[ChartArtifact, ...] = ()

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0 and not self.timed_out

    def to_dict(self) -> dict:
        return {
            "stdout": self.stdout,
            "stderr": self.stderr,
            "exit_code": self.exit_code,
            "duration_s": round(self.duration_s, 6),
            "timed_out": self.timed_out,
            "artifacts": [{"name": a.name, "spec": a.spec} for a in self.artifacts],
        }


def result_from_dict(raw: Mapping) -> ExecutionResult:
    return ExecutionResult(
        stdout=raw.get("stdout", ""),
        stderr=raw.get("stderr", ""),
        exit_code=int(raw.get("exit_code", 0)),
        duration_s=float(raw.get("duration_s", 0.0)),
        timed_out=bool(raw.get("timed_out", False)),
        artifacts=tuple(
            ChartArtifact(name=a["name"], spec=dict(a["spec"]))
            for a in raw.get("artifacts", [])
        ),
    )


class ExecutorExhaustedError(Exception):
    pass


class ScriptedExecutor:
    """Replays a FIFO list of pre-recorded execution results."""

    def __init__(self, results: Sequence[Mapping]):
        self._results = [result_from_dict(r) for r in results]
        self._pos = 0

    @classmethod
    def from_fixture(cls, fixture: Mapping) -> "ScriptedExecutor":
        # Fixture file form: {"executions": [result, ...]}
        return cls(fixture.get("executions", []))

    def run(self, code: str, dataset_path: Optional[Path] = None) -> ExecutionResult:
        if self._pos >= len(self._results):
            raise ExecutorExhaustedError(
                f"scripted executor exhausted after {self._pos} runs"
            )
        result = self._results[self._pos]
        self._pos += 1
        return result

    def remaining(self) -> int:
        return len(self._results) - self._pos


def _clip(text: str) -> str:
    if len(text) <= OUTPUT_CAP:
        return text
    return text[:OUTPUT_CAP] + f"\n... [truncated {len(text) - OUTPUT_CAP} chars]"


class SubprocessExecutor:
    """Runs snippets via ``python - <<code`` in an isolated temp directory."""

    def __init__(self, timeout_s: float = DEFAULT_TIMEOUT_S, python: str = sys.executable):
        self.timeout_s = timeout_s
        self.python = python

    def run(self, code: str, dataset_path: Optional[Path] = None) -> ExecutionResult:
        with tempfile.TemporaryDirectory(prefix="chatinsights-exec-") as workdir:
            work = Path(workdir)
            (work / "sitecustomize.py").write_text(SITECUSTOMIZE, encoding="utf-8")
            (work / "snippet.py").write_text(code, encoding="utf-8")
            if dataset_path is not None:
                (work / "data.csv").write_bytes(Path(dataset_path).read_bytes())
            started = time.monotonic()
            try:
                proc = subprocess.run(
                    [self.python, "snippet.py"],
                    cwd=work,
                    env={
                        "PYTHONPATH": str(work),  # activates the sitecustomize shim
                        "PYTHONDONTWRITEBYTECODE": "1",
                        "PATH": "/usr/bin:/bin",
                    },
                    capture_output=True,
                    text=True,
                    timeout=self.timeout_s,
                )
                duration = time.monotonic() - started
                return ExecutionResult(
                    stdout=_clip(proc.stdout),
                    stderr=_clip(proc.stderr),
                    exit_code=proc.returncode,
                    duration_s=duration,
                    artifacts=_collect_charts(work),
                )
            except subprocess.TimeoutExpired as exc:
                duration = time.monotonic() - started
                out = exc.stdout or b""
                err = exc.stderr or b""
                return ExecutionResult(
                    stdout=_clip(out if isinstance(out, str) else out.decode("utf-8", "replace")),
                    stderr=_clip(err if isinstance(err, str) else err.decode("utf-8", "replace")),
                    exit_code=-1,
                    duration_s=duration,
                    timed_out=True,
                    artifacts=_collect_charts(work),
                )


def _collect_charts(work: Path) -> tuple[ChartArtifact, ...]:
    artifacts = []
    for path in sorted(work.glob("chart_*.json")):
        try:
            spec = json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, OSError):
            continue  # malformed chart files are dropped, not fatal
        if isinstance(spec, dict):
            artifacts.append(ChartArtifact(name=path.name, spec=spec))
    return tuple(artifacts)
