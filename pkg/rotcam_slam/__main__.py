#!/usr/bin/env python3

"""
Main entry point for the rotcam_slam CLI.
"""

from rotcam_slam.cli import run_cli


def main() -> None:
    """Main entry point for the command line."""
    run_cli()


if __name__ == "__main__":
    main()
