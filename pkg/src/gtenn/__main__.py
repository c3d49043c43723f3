"""Allow ``python -m gtenn``."""

import sys

from .cli import main

sys.exit(main())
