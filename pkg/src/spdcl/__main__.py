import sys

from spdcl.cli import main

sys.exit(main())
