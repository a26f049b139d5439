import sys

from ic_lab.cli import main

sys.exit(main())
