"""External maps over a line-delimited JSON subprocess protocol.

Request (one line on the plugin's stdin):   {"matrix": {"rows": n, "cols": n, "data": [[re, im], ...]}}
Response (one line on the plugin's stdout): {"matrix": {"rows": m, "cols": m, "data": [...]}}
"""
from __future__ import annotations

import atexit
import json
import subprocess
import sys
from collections import deque
from pathlib import Path

from .matrix_core import MatrixFormatError, matrix_from_json, matrix_to_json
from .predicates import BlackBoxMap, MapContractError


class PluginProtocolError(MapContractError):
    pass


class PluginProcess:
    def __init__(self, argv: list):
        self.argv = argv
        self.proc = None
        self.transcript = deque(maxlen=6)

    def _start(self):
        self.proc = subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                     stderr=subprocess.PIPE, text=True, bufsize=1)
        atexit.register(self.close)

    def _fail(self, msg):
        excerpt = "\n".join(self.transcript)
        raise PluginProtocolError(f"{msg}; transcript:\n{excerpt}")

    def __call__(self, x):
        if self.proc is None:
            self._start()
        line = json.dumps({"matrix": matrix_to_json(x)})
        self.transcript.append("> " + line[:200])
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail("plugin closed its input")
        reply = self.proc.stdout.readline()
        if not reply:
            err = self.proc.stderr.read() if self.proc.poll() is not None else ""
            self._fail(f"plugin produced no response (exit={self.proc.poll()}) {err.strip()[:200]}")
        self.transcript.append("< " + reply.strip()[:200])
        try:
            return matrix_from_json(json.loads(reply)["matrix"])
        except (json.JSONDecodeError, KeyError, TypeError, MatrixFormatError) as exc:
            self._fail(f"malformed response ({exc})")

    def close(self):
        if self.proc is not None and self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
        if self.proc is not None:
            for stream in (self.proc.stdout, self.proc.stderr):
                stream.close()


def load_map_plugin(path, n: int, k: int, m: int | None = None, args=(),
                    label: str | None = None) -> BlackBoxMap:
    """Wrap an executable (or a ``.py`` script) as an exclusive BlackBoxMap."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"plugin {path} not found")
    argv = [sys.executable, str(path)] if path.suffix == ".py" else [str(path)]
    proc = PluginProcess(argv + [str(a) for a in args])
    phi = BlackBoxMap(n, k, n if m is None else m, proc, label or f"plugin:{path.name}",
                      exclusive=True)
    phi.close = proc.close
    return phi
