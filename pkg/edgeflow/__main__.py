"""Entry point for ``python -m edgeflow``."""

import sys

from edgeflow.cli import main

sys.exit(main())
