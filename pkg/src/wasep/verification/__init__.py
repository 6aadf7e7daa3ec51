"""Experiment suites, exact small-system oracle, and pathwise checks."""
