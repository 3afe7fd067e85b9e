"""Shared argument parsing for the fixture targets: `--name=value ... instance seed`."""

import sys


def parse(argv=None):
    flags, positional = {}, []
    for arg in sys.argv[1:] if argv is None else argv:
        if arg.startswith("--") and "=" in arg:
            name, value = arg[2:].split("=", 1)
            flags[name] = value
        else:
            positional.append(arg)
    return flags, positional
