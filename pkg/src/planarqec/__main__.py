import sys

from planarqec.cli import main

sys.exit(main())
