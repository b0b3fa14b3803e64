import sys

from qkflag.cli import main

sys.exit(main())
