#!/usr/bin/env python3
"""Runs the trainer straight from the source tree, no install needed."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from spw_trainer.cli import main

if __name__ == "__main__":
    sys.exit(main())
