"""Entry point for cfexplain."""

import sys

from cfexplain.app import main

if __name__ == "__main__":
    sys.exit(main())
