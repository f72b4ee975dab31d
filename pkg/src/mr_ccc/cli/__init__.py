"""CLI module for MR-CCC."""

from .app import app, cli_dispatch

__all__ = ["app", "cli_dispatch"]
