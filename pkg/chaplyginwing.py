"""
Entry point of the conical wing solver.

Runs one of the subcommands solve, verify or sweep on a JSON config, see modules/docs for each.

Functions:
- main: runs the command line and exits with its code.
"""
import sys

from modules.cli import main as cli_main


def main():
    """
    Main entry point: parses sys.argv, runs the subcommand and exits with its code.
    """
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
