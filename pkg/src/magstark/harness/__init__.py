"""Scenario configuration, experiments, reports and the CLI."""
