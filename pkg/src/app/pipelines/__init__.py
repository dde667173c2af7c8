"""Experiment harness: example registry, table runner and CLI."""
