"""Text formats for external solvers."""
