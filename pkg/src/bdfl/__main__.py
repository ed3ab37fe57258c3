"""`python -m bdfl` runs the same CLI as the `bdfl` script."""

import sys

from bdfl.cli.main import main

if __name__ == "__main__":
    sys.exit(main(prog_name="bdfl"))
