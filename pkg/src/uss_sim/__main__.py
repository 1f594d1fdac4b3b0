"""
Main entry point for the uss_sim package.
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
