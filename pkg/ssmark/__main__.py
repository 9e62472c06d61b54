import sys

from ssmark.cli import main

sys.exit(main())
