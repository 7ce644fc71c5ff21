"""Subcommands of the acforge command group, one module per area of the workflow."""
