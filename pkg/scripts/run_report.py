#!/usr/bin/env python3
"""Run the full verification suite and write its artifacts.

Equivalent to `branchlab report --out <dir>`; kept as a script so the whole
study is reproducible with one command.
"""

import sys

from branchlab.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/report"
    sys.exit(main(["--out", out, "report"]))
