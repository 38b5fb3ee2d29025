"""Launch sim-check from a source checkout.

Usage: python run.py <command> [options]   (see cli/main.py)
"""

import sys
from pathlib import Path

# Ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from cli.main import main


if __name__ == "__main__":
    sys.exit(main())
