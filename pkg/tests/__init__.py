"""nestlab test suite."""
