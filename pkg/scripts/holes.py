#!/usr/bin/env python3
"""
Perforated medium simulator - command-line entry point

Usage:
    python scripts/holes.py validate
    python scripts/holes.py converge --config config/base.json --out runs/base
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.harness.cli import cli
from core.utils.logger import HolesLogger

if __name__ == '__main__':
    code = cli()
    HolesLogger.shutdown()
    sys.exit(code)
