"""Tests for Google Workspace Tools."""
