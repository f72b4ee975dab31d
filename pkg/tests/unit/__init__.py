"""Unit tests for Google Workspace Tools."""
