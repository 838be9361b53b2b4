"""Verification suites and their certificates."""
