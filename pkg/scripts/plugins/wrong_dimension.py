#!/usr/bin/env python3
"""Misbehaving plugin: always answers with a 1x1 matrix."""
import json
import sys

for line in sys.stdin:
    if line.strip():
        sys.stdout.write(json.dumps({"matrix": {"rows": 1, "cols": 1, "data": [[0.0, 0.0]]}}) + "\n")
        sys.stdout.flush()
