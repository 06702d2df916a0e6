import sys

from owa.cli import main

sys.exit(main())
