#!/usr/bin/env python3
"""Plugin that returns its input unchanged."""
import sys

for line in sys.stdin:
    line = line.strip()
    if line:
        sys.stdout.write(line + "\n")
        sys.stdout.flush()
