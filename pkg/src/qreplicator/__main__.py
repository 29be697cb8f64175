import sys

from qreplicator.cli import main

sys.exit(main())
