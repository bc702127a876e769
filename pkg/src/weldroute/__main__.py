import sys

from weldroute.cli import main

sys.exit(main())
