import sys

from hbdiff.cli import main

sys.exit(main())
