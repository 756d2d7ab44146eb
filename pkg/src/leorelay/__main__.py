import sys

from leorelay.cli import main

sys.exit(main())
