import sys

from phmin.cli import main

sys.exit(main())
