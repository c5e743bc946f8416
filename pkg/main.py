"""
banditgap - entry point.

Wires together:  config -> instance file -> relaxation / policy / DP -> CLI display
"""

from __future__ import annotations

from banditgap.cli import main

if __name__ == "__main__":
    main()
