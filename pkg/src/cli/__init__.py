"""Command-line harness: scenario subcommands and report writing."""
