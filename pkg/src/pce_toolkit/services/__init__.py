"""Orchestration services behind the CLI subcommands."""
