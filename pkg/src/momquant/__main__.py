import sys

from momquant.cli import main

sys.exit(main())
