"""Encoders, solver, oracle and reporting."""
