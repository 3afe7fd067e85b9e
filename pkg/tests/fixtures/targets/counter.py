"""
Records how many copies of itself are alive.

Usage: counter.py [flags] DIRECTORY SEED. Each copy creates DIRECTORY/<pid>.live,
appends the number of live markers it sees to DIRECTORY/peaks.txt, holds
for a moment and removes its marker.
"""

import os
import time
from pathlib import Path

from _flags import parse

_, positional = parse()
directory = Path(positional[0])
marker = directory / f"{os.getpid()}.live"
marker.touch()
try:
    alive = len(list(directory.glob("*.live")))
    with open(directory / "peaks.txt", "a", encoding="utf-8") as handle:
        handle.write(f"{alive}\n")
    time.sleep(0.3)
finally:
    marker.unlink()
print("RESULT: 0.3")
