"""Tests package for the starframe library and CLI."""
