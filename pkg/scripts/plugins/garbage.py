#!/usr/bin/env python3
"""Misbehaving plugin: answers with text that is not JSON."""
import sys

for line in sys.stdin:
    sys.stdout.write("hello\n")
    sys.stdout.flush()
