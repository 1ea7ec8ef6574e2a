#!/usr/bin/env python
"""Command-line utility for sego experiments."""
import sys


def main():
    """Run a sego command."""
    from sego.cli import execute_from_command_line
    sys.exit(execute_from_command_line(sys.argv))


if __name__ == '__main__':
    main()
