import sys

from lagoonopt.cli import main

sys.exit(main())
