import sys

from mgpf.cli import main

sys.exit(main())
