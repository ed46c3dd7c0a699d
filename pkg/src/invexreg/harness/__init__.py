"""Experiment harness: config parsing, commands, CSV/JSON/PNG output."""
