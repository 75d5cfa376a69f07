import sys

from gpopt.cli import main

sys.exit(main())
