import sys

from symtensor.cli.__main__ import main

sys.exit(main())
