"""End-to-end tests for Google Workspace Tools."""
