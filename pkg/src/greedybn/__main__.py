import sys

from greedybn.cli import main

sys.exit(main())
