import sys

from ldts.cli import main

sys.exit(main())
