import sys

from qnnlab.cli import main

sys.exit(main())
