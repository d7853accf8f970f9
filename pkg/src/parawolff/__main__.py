"""Entry point for running parawolff as a module."""

from parawolff.cli import cli_entry

if __name__ == "__main__":
    cli_entry()
