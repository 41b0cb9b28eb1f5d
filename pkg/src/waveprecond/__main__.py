import sys

from waveprecond.cli import main

sys.exit(main())
