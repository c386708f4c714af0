import sys

from rankga.experiments.cli import main

sys.exit(main())
