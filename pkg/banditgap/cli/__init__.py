"""Command-line entry point: ``banditgap <command> ...``."""

from __future__ import annotations

import sys

from banditgap.cli.commands import build_parser, run_command

__all__ = ["build_parser", "main", "run_command"]


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
