"""
Entry point for running JunctionWalk as a module.
Example: python -m src sample --data data.csv --out run/
"""

import sys

from src.core.app import main

if __name__ == "__main__":
    sys.exit(main())
